"""Run orchestration: evolve, stream diagnostics to CSV, index everything in a manifest."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..airy import lp_norm
from ..diagnostics import (
    ScatteringState,
    accumulate_B,
    left_prediction,
    left_region_check,
    right_region_check,
    self_similar_check,
)
from ..errors import BlowupError, ConfigurationError, LabError, ResolutionError
from ..evolver import EvolverState, evolve_profile, geometric_schedule, zero_mode_rate
from ..painleve import ProfileCache, evaluate_S
from ..records import fit_power_law
from .config import RunConfig
from .io import RunManifest, write_csv, write_field

ASYMPTOTIC_FROM = 10.0  # region checks start here
LEFT_LAG = 4.0  # left-region predictions start from the last snapshot at or before t / LEFT_LAG
LP_EXPONENT = 6.0
FIT_COLUMNS = ("diagnostic", "quantity", "exponent", "halfwidth", "prefactor", "n", "t_min", "t_max")


def default_cache_dir() -> Path:
    return Path(os.environ.get("CMKDV_LAB_CACHE", Path.home() / ".cache" / "cmkdv-lab"))


_caches = {}


def profile_cache(directory=None) -> ProfileCache:
    directory = Path(directory) if directory is not None else default_cache_dir()
    if directory not in _caches:
        _caches[directory] = ProfileCache(directory)
    return _caches[directory]


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime())


def _trajectory(config: RunConfig):
    grid = config.make_grid()
    fhat0 = config.initial_spectrum(grid)
    times = geometric_schedule(config.t_final, config.snapshot_ratio, config.extra_times + config.dump_times)
    if config.linear:
        from ..evolver import Trajectory

        return Trajectory(EvolverState.from_profile(grid, fhat0, float(t), config.sign).with_diagnostics()
                          for t in times)
    return evolve_profile(grid, fhat0, config.sign, config.t_final, config.dt, times)


def _fit_row(diagnostic, quantity, t, y, t_min, t_max):
    t, y = np.asarray(t, float), np.asarray(y, float)
    keep = (t >= t_min - 1e-9) & (t <= t_max + 1e-9)
    if np.count_nonzero(keep) < 2 or not np.all(y[keep] > 0):
        return [diagnostic, quantity, "nan", "nan", "nan", int(np.count_nonzero(keep)), t_min, t_max]
    fit = fit_power_law(t[keep], y[keep])
    return [diagnostic, quantity, fit.exponent, fit.halfwidth, fit.prefactor, fit.n, t_min, t_max]


class _Writer:
    def __init__(self, manifest: RunManifest, root: Path):
        self.manifest = manifest
        self.root = root
        self.fits = []

    def table(self, name, columns, rows):
        path = write_csv(self.root / f"{name}.csv", name, columns, rows)
        self.manifest.add(path, "csv")


def _write_diagnostics(config: RunConfig, traj, out: _Writer, cache):
    eps = config.epsilon
    sign = config.sign
    enabled = set(config.diagnostics)
    ts = traj.times
    lo, hi = config.fit_window

    if "conserved" in enabled:
        c0 = traj[0].conserved
        rows = []
        for s in traj:
            c = s.conserved
            dP = (c.P - c0.P) / abs(c0.P) if c0.P else c.P - c0.P
            dE = (c.E - c0.E) / abs(c0.E) if c0.E else c.E - c0.E
            rows.append([s.t, s.step_count, c.P, c.W, c.E, dP, dE, s.field.norm(np.inf),
                         s.zero_mode.real, s.zero_mode.imag])
        out.table("conserved", ("t", "steps", "P", "W", "E", "P_drift", "E_drift", "sup_norm",
                                "alpha_re", "alpha_im"), rows)

    if "linear_decay" in enabled:
        sup = [float(np.max(np.abs(s.field.values))) for s in traj]
        lp = [lp_norm(s.field, LP_EXPONENT) for s in traj]
        out.table("linear_decay", ("t", "sup_norm", "L6_norm"), zip(ts, sup, lp))
        out.fits.append(_fit_row("linear_decay", "sup_norm", ts, sup, lo, hi))
        out.fits.append(_fit_row("linear_decay", "L6_norm", ts, lp, lo, hi))

    if "zero_mode" in enabled:
        rows, mags = [], []
        for s in traj:
            rate = zero_mode_rate(s.field, sign)
            mags.append(abs(rate))
            rows.append([s.t, s.zero_mode.real, s.zero_mode.imag, rate.real, rate.imag, abs(rate)])
        out.table("zero_mode", ("t", "alpha_re", "alpha_im", "rate_re", "rate_im", "rate_abs"), rows)
        out.fits.append(_fit_row("zero_mode", "rate_abs", ts, mags, ASYMPTOTIC_FROM, hi))

    late = [s for s in traj if s.t >= ASYMPTOTIC_FROM - 1e-9]

    if "right" in enabled:
        reports = [right_region_check(s.field, s.t, eps) for s in late]
        out.table("right", ("t", "metric"), [(r.t, r.metric) for r in reports])
        out.fits.append(_fit_row("right", "metric", [r.t for r in reports], [r.metric for r in reports],
                                 ASYMPTOTIC_FROM, hi))

    if "self_similar" in enabled:
        reports = [self_similar_check(s.field, s.zero_mode, s.t, sign, cache=cache) for s in late]
        out.table("self_similar", ("t", "metric", "alpha_re", "alpha_im"),
                  [(r.t, r.metric, r.extra["alpha"].real, r.extra["alpha"].imag) for r in reports])
        out.fits.append(_fit_row("self_similar", "metric", [r.t for r in reports],
                                 [r.metric for r in reports], lo, hi))

    if "left" in enabled or "scattering" in enabled:
        scat = ScatteringState.start(traj[0].profile_hat, sign)
        for s in traj[1:]:
            accumulate_B(scat, s.profile_hat)

    if "left" in enabled:
        rows = []
        for s in late:
            ref = _reference_time(ts, s.t / LEFT_LAG)
            try:
                direct = left_region_check(s.field, s.profile_hat, None, s.t).metric
                with_B = without_B = float("nan")
                if ref is not None:
                    with_B = left_region_check(s.field, s.profile_hat, scat, s.t, True, reference=ref).metric
                    without_B = left_region_check(s.field, s.profile_hat, scat, s.t, False,
                                                  reference=ref).metric
            except ResolutionError:
                continue
            rows.append([s.t, ref if ref is not None else float("nan"), direct, with_B, without_B])
        out.table("left", ("t", "reference_t", "direct", "with_B", "without_B"), rows)

    if "scattering" in enabled:
        grid = traj[0].grid
        idx = [int(np.argmin(np.abs(grid.xi - xi))) for xi in config.tracked_xi]
        rows = []
        for t, B, v in scat.history:
            for k in idx:
                fh = np.exp(1j * B[k]) * v[k]
                rows.append([t, grid.xi[k], abs(fh), B[k], v[k].real, v[k].imag])
        out.table("scattering", ("t", "xi", "abs_fhat", "B", "v_re", "v_im"), rows)
        rows = [[grid.xi[k], scat.v_values[k].real, scat.v_values[k].imag, scat.cauchy_tail[k]] for k in idx]
        out.table("f_infinity", ("xi", "re", "im", "cauchy_tail"), rows)

    if {"left", "self_similar"} <= enabled and traj[-1].t >= ASYMPTOTIC_FROM:
        out.table("final_regions", ("x", "u_re", "u_im", "S_re", "S_im", "left_re", "left_im"),
                  _final_regions(traj[-1], sign, cache))

    out.table("fits", FIT_COLUMNS, out.fits)


def _final_regions(state, sign, cache, max_rows=4000):
    """``u``, ``S`` and the left-region formula on ``-3t <= x <= 4 t^(1/3)``."""
    grid, t = state.grid, state.t
    x_lo = max(-3.0 * t, -0.95 * grid.domain_half_length)
    idx = np.nonzero((grid.x >= x_lo) & (grid.x <= 4.0 * t ** (1.0 / 3.0)))[0]
    idx = idx[:: max(1, idx.size // max_rows)]
    x = grid.x[idx]
    u = state.field.values[idx]
    S = evaluate_S(state.zero_mode, t, x, sign, cache=cache)
    left = np.zeros(x.shape, complex)
    neg = x <= -t ** (1.0 / 3.0)
    left[neg] = left_prediction(grid, state.profile_hat.coeffs, t, x[neg])
    return zip(x, u.real, u.imag, S.real, S.imag, left.real, left.imag)


def _reference_time(times, t, rtol=1e-9):
    """Latest snapshot at or before ``t``."""
    earlier = times[times <= t * (1.0 + rtol)]
    return float(earlier[-1]) if earlier.size else None


def _clear_outputs(root: Path):
    for p in sorted(root.glob("*")):
        if p.is_file() and (p.suffix in (".csv", ".fld", ".json", ".py") or p.name == "config.txt"):
            p.unlink()
    fields = root / "fields"
    if fields.is_dir():
        for p in fields.glob("*.fld"):
            p.unlink()


def run(config: RunConfig, force: bool = False, cache=None) -> RunManifest:
    """Evolve ``config`` and write its outputs under ``config.output_dir``.

    A finished run with the same configuration hash and intact files is
    reused unless ``force`` is set (the returned manifest has ``cache_hit``).
    Numerical failure still produces a manifest, marked ``failed``.
    """
    root = Path(config.output_dir)
    digest = config.config_hash()
    if not force and (root / RunManifest.FILENAME).exists():
        try:
            old = RunManifest.load(root)
        except LabError:
            old = None
        if old is not None and old.ok and old.config_hash == digest and not old.verify():
            old.cache_hit = True
            return old
    root.mkdir(parents=True, exist_ok=True)
    _clear_outputs(root)
    cache = profile_cache() if cache is None else cache

    manifest = RunManifest(digest, __version__, _now(), directory=str(root),
                           tolerances={"dt": config.dt, "profile_calibration": cache.tol,
                                       "snapshot_ratio": config.snapshot_ratio})
    config.save(root / "config.txt")
    manifest.add(root / "config.txt", "config")
    out = _Writer(manifest, root)
    traj = _trajectory(config)
    if traj.status != "ok":
        manifest.status = "failed"
        manifest.error = str(traj.error)
        last = traj.error.last_state if isinstance(traj.error, BlowupError) else None
        if last is not None:
            (root / "fields").mkdir(exist_ok=True)
            path = write_field(root / "fields" / "last_good.fld", last.grid, last.profile_hat.coeffs,
                               last.t, "spectral")
            manifest.add(path, "field", last.t)
    if len(traj):
        _write_diagnostics(config, traj, out, cache)
        _dump_fields(config, traj, manifest, root)
    if traj.status == "ok":
        manifest.status = "ok"
    manifest.finished = _now()
    manifest.save()
    return manifest


def _dump_fields(config, traj, manifest, root):
    wanted = set(np.round(config.dump_times, 12)) | {round(traj[-1].t, 12)}
    (root / "fields").mkdir(exist_ok=True)
    for s in traj:
        if round(s.t, 12) in wanted:
            path = write_field(root / "fields" / f"profile_t{s.t:.6f}.fld", s.grid, s.profile_hat.coeffs,
                               s.t, "spectral")
            manifest.add(path, "field", s.t)


# --------------------------------------------------------------------------
# sweeps


def _run_safely(config: RunConfig, force: bool):
    try:
        return run(config, force=force)
    except LabError as exc:
        m = RunManifest(config.config_hash(), __version__, _now(), _now(), "failed", str(exc),
                        directory=config.output_dir)
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
        m.save()
        return m


AGGREGATE_QUANTITIES = (
    ("self_similar", "metric"),
    ("linear_decay", "sup_norm"),
    ("linear_decay", "L6_norm"),
    ("zero_mode", "rate_abs"),
    ("right", "metric"),
)


def sweep(base: RunConfig, axis: str, values, root=None, workers: int = 1,
          force: bool = False) -> list:
    """Independent runs over ``axis``; writes ``aggregate.csv`` in ``root``.

    Manifests come back in the order of ``values``.  A failed run leaves a
    ``failed`` row with empty exponent cells in the aggregate.
    """
    if axis not in RunConfig.__dataclass_fields__ or axis == "output_dir":
        raise ConfigurationError(f"cannot sweep over {axis!r}")
    root = Path(root if root is not None else base.output_dir)
    configs = []
    for v in values:
        configs.append(base.with_(**{axis: v, "output_dir": str(root / f"{axis}={v}")}))
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            manifests = list(pool.map(_run_safely, configs, [force] * len(configs)))
    else:
        manifests = [_run_safely(c, force) for c in configs]
    root.mkdir(parents=True, exist_ok=True)
    write_aggregate(root / "aggregate.csv", axis, values, manifests)
    return manifests


def write_aggregate(path, axis, values, manifests):
    from .io import read_csv

    columns = [axis, "status", "config_hash"]
    for diag, qty in AGGREGATE_QUANTITIES:
        columns += [f"{diag}_{qty}_exponent", f"{diag}_{qty}_halfwidth"]
    columns.append("beta")
    rows = []
    for value, m in zip(values, manifests):
        fits = {}
        fits_path = Path(m.directory) / "fits.csv"
        if m.ok and fits_path.exists():
            for row in read_csv(fits_path)[2]:
                fits[(row[0], row[1])] = (row[2], row[3])
        row = [value, m.status, m.config_hash]
        for key in AGGREGATE_QUANTITIES:
            row += list(fits.get(key, ("", "")))
        ss = fits.get(("self_similar", "metric"))
        row.append(-ss[0] - 1.0 / 3.0 if ss and isinstance(ss[0], float) else "")
        rows.append(row)
    return write_csv(path, "aggregate", columns, rows)

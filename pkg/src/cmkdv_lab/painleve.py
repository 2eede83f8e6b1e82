"""Self-similar profiles.

A self-similar solution ``S(x, t) = t^(-1/3) sigma(x t^(-1/3))`` of

    u_t + u_xxx = mu |u|^2 u_x

has a profile obeying the third-order equation

    sigma''' - (y sigma)' / 3 = mu |sigma|^2 sigma'.

Within the phase-rotation family ``sigma = exp(i theta) tau`` with ``tau`` real
and decaying at ``+inf``, one integration gives the Painleve II form

    tau'' = y tau / 3 + mu tau^3 / 3,

and ``tau ~ c Ai(3^(-1/3) y)`` as ``y -> +inf``.  The amplitude ``c`` is fixed
by the nonlocal condition ``tau_hat(0) = r``.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from .airy import airy_pair, apply_L
from .errors import (
    AccuracyError,
    CalibrationError,
    ConfigurationError,
    CoverageError,
    DomainError,
    ProfileBlowupError,
)
from .records import DiagnosticsRecord
from .spectral import SQRT_2PI, Grid, SpatialField, smooth_step

AIRY_SCALE = 3.0 ** (-1.0 / 3.0)
LINEAR_SLOPE = 1.0 / (AIRY_SCALE * SQRT_2PI)  # d tau_hat(0) / dc at c = 0
Y_RIGHT = 24.0
DEFAULT_COVERAGE = 170.0
MESH_STEP = 0.005
BLOWUP_LEVEL = 10.0
MEAN_WINDOWS = (40.0, 60.0, 80.0)
MEAN_TOLERANCE = 1e-5
CALIBRATION_TOL = 1e-10
MAX_SECANT = 50
MAX_AMPLITUDE = 1.0  # bounded solutions are unique below this
TAPER_START = 0.75  # fraction of L (left side) where build_S begins to taper
PROFILE_VERSION = 1


def _check_sign(sign):
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


@dataclass
class ProfileSolution:
    """Samples of ``tau, tau', tau''`` on an ascending uniform mesh."""

    c: float
    sign: int
    y: np.ndarray
    tau: np.ndarray
    dtau: np.ndarray
    d2tau: np.ndarray

    @property
    def step(self) -> float:
        return float(self.y[1] - self.y[0])


def _airy_tail(c, y):
    a, ap = airy_pair(AIRY_SCALE * np.asarray(y, dtype=float))
    return c * a, c * AIRY_SCALE * ap, c * (np.asarray(y) / 3.0) * a


def integrate_profile(c: float, sign: int, coverage: float = DEFAULT_COVERAGE,
                      y_right: float = Y_RIGHT, step: float = MESH_STEP,
                      rtol: float = 1e-12) -> ProfileSolution:
    """Shoot the third-order profile equation from ``y_right`` down to ``-coverage``.

    Raises :class:`ProfileBlowupError` when ``|tau|`` reaches ``BLOWUP_LEVEL``.
    """
    sign = _check_sign(sign)
    n = int(round((y_right + coverage) / step))
    y = np.linspace(-coverage, y_right, n + 1)
    if c == 0.0:
        zero = np.zeros_like(y)
        return ProfileSolution(0.0, sign, y, zero, zero.copy(), zero.copy())

    start = [float(v) for v in _airy_tail(c, y_right)]

    def rhs(s, state):
        tau, dtau, d2tau = state
        return [dtau, d2tau, (tau + s * dtau) / 3.0 + sign * tau * tau * dtau]

    def escape(s, state):
        return abs(state[0]) - BLOWUP_LEVEL

    escape.terminal = True
    # the tail starts near 1e-20, so error control must be purely relative
    sol = solve_ivp(rhs, (y_right, -coverage), start, method="DOP853", rtol=rtol,
                    atol=1e-300, t_eval=y[::-1], events=escape)
    if sol.status == 1 or sol.status == -1:
        where = float(sol.t_events[0][0]) if sol.t_events[0].size else float(sol.t[-1])
        raise ProfileBlowupError(f"profile with c={c!r} escaped near y={where:.3f}", c=c, y=where)
    tau, dtau, d2tau = sol.y[:, ::-1]
    return ProfileSolution(float(c), sign, y, tau, dtau, d2tau)


def profile_mean(sol: ProfileSolution, windows=MEAN_WINDOWS):
    """``(2 pi)^(-1/2) int tau dy`` and an error estimate.

    The left tail only decays like ``|y|^(-1/4)`` while oscillating, so the
    integral is taken against smooth windows switching off on
    ``[-2W, -W]``.  Window edges are flat to all orders, which makes the
    trapezoid rule spectrally accurate and the estimates converge very
    quickly in ``W``; an Aitken step combines the three widths.
    """
    windows = sorted(windows)
    if 2 * windows[-1] > -sol.y[0] + 1e-9:
        raise CoverageError("profile mesh too short for the requested mean windows")
    if not np.any(sol.tau):
        return 0.0, 0.0
    h = sol.step
    est = []
    for w in windows:
        weight = 1.0 - smooth_step((-sol.y - w) / w)
        est.append(np.sum(sol.tau * weight) * h / SQRT_2PI)
    est = np.array(est)
    d1, d2 = est[1] - est[0], est[2] - est[1]
    value = est[2]
    if abs(d1 - d2) > 1e3 * np.finfo(float).eps * abs(value) and abs(d2) < abs(d1):
        value = est[2] - d2 * d2 / (d2 - d1)
    err = float(max(abs(d2), abs(value - est[2])))
    if np.ptp(est) > MEAN_TOLERANCE * max(1.0, abs(value)):
        raise AccuracyError(f"window estimates disagree by {np.ptp(est):.2e}", achieved=float(np.ptp(est)))
    return float(value), err


# --------------------------------------------------------------------------


@dataclass
class SelfSimilarProfile:
    """Calibrated real profile ``tau`` together with a phase ``theta``."""

    sign: int
    amplitude_r: float
    phase_theta: float
    asymptotic_c: float
    y: np.ndarray
    tau: np.ndarray
    dtau: np.ndarray
    d2tau: np.ndarray
    mean_error: float = 0.0
    _interp: object = field(default=None, repr=False, compare=False)

    @property
    def profile_grid(self) -> np.ndarray:
        return self.y

    @property
    def tau_samples(self) -> np.ndarray:
        return self.tau

    @property
    def coverage(self) -> float:
        return float(-self.y[0])

    def with_phase(self, theta: float) -> "SelfSimilarProfile":
        return replace(self, phase_theta=float(theta), _interp=self._interp)

    def _hermite(self):
        if self._interp is None:
            stacked = np.stack([self.tau, self.dtau, self.d2tau], axis=1)
            self._interp = BPoly.from_derivatives(self.y, stacked)
        return self._interp

    def tau_at(self, y, nu: int = 0):
        """``tau`` (or its ``nu``-th derivative) with the Airy tail beyond the mesh."""
        y = np.asarray(y, dtype=float)
        if np.any(y < self.y[0] - 1e-12):
            raise CoverageError(f"y={y.min():.3f} is left of the profile mesh ({self.y[0]:.3f})")
        out = np.zeros(y.shape)
        if self.asymptotic_c == 0.0:
            return out
        inside = y <= self.y[-1]
        out[inside] = self._hermite()(y[inside], nu)
        if np.any(~inside):
            # linear Airy tail; the cubic correction is far below rounding here
            tail = _airy_tail(self.asymptotic_c, y[~inside])
            if nu > 2:
                raise ConfigurationError("tail derivatives above second order are not provided")
            out[~inside] = tail[nu]
        return out

    def sigma(self, y):
        return np.exp(1j * self.phase_theta) * self.tau_at(y)

    def residual_third(self, margin: float = 0.0) -> float:
        """Max residual of the third-order equation, ``tau''' `` from 8th-order differences."""
        d3 = _fd8_first(self.d2tau, self.step)
        y, t, dt = (a[4:-4] for a in (self.y, self.tau, self.dtau))
        res = d3 - (t + y * dt) / 3.0 - self.sign * t * t * dt
        keep = y >= y[0] + margin
        return float(np.max(np.abs(res[keep]), initial=0.0))

    def residual_second(self) -> float:
        """Max residual of ``tau'' - y tau/3 - mu tau^3/3`` with ``tau''`` differenced from ``tau``."""
        d2 = _fd8_second(self.tau, self.step)
        y, t = self.y[4:-4], self.tau[4:-4]
        return float(np.max(np.abs(d2 - y * t / 3.0 - self.sign * t ** 3 / 3.0), initial=0.0))

    @property
    def step(self) -> float:
        return float(self.y[1] - self.y[0])

    def mean(self) -> float:
        return profile_mean(ProfileSolution(self.asymptotic_c, self.sign, self.y, self.tau,
                                            self.dtau, self.d2tau))[0]


_FD8_1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_FD8_2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])


def _stencil(v, coeffs):
    n = v.size
    return sum(c * v[i:n - 8 + i] for i, c in enumerate(coeffs))


def _fd8_first(v, h):
    return _stencil(v, _FD8_1) / h


def _fd8_second(v, h):
    return _stencil(v, _FD8_2) / h ** 2


def _profile_from(sol: ProfileSolution, r: float, err: float) -> SelfSimilarProfile:
    return SelfSimilarProfile(sol.sign, float(r), 0.0, sol.c, sol.y, sol.tau, sol.dtau, sol.d2tau, err)


def calibrate_amplitude(r_target: float, sign: int, tol: float = CALIBRATION_TOL,
                        coverage: float = DEFAULT_COVERAGE, max_iter: int = MAX_SECANT) -> SelfSimilarProfile:
    """Find ``c`` with ``tau_hat(0) = r_target`` by a safeguarded secant iteration.

    Steps that leave the bounded basin are halved back towards the last
    bounded iterate.
    """
    sign = _check_sign(sign)
    if not 0 <= r_target < MAX_AMPLITUDE:
        raise DomainError(f"the profile amplitude r must lie in [0, {MAX_AMPLITUDE:g}), got {r_target!r}")
    if r_target == 0:
        return _profile_from(integrate_profile(0.0, sign, coverage), 0.0, 0.0)

    def evaluate(c):
        sol = integrate_profile(c, sign, coverage)
        try:
            m, err = profile_mean(sol)
        except AccuracyError as exc:
            raise CalibrationError(f"profile mean undefined at c={c!r}: {exc}", bracket=(c, c)) from exc
        return sol, m - r_target, err

    c0 = r_target / LINEAR_SLOPE
    sol0, g0, e0 = evaluate(c0)
    if abs(g0) < tol:
        return _profile_from(sol0, r_target, e0)
    c1 = c0 * (1.0 - 1e-3)
    sol1, g1, e1 = evaluate(c1)
    lo_blow = None
    for _ in range(max_iter):
        if abs(g1) < tol:
            return _profile_from(sol1, r_target, e1)
        if g1 == g0:
            break
        step = -g1 * (c1 - c0) / (g1 - g0)
        while True:
            trial = c1 + step
            if lo_blow is not None and abs(trial) >= abs(lo_blow):
                step *= 0.5
                continue
            try:
                sol2, g2, e2 = evaluate(trial)
                break
            except ProfileBlowupError:
                lo_blow = trial
                step *= 0.5
                if abs(step) < 1e-15 * abs(c1):
                    raise CalibrationError("calibration trapped at the basin edge",
                                           bracket=(c1, lo_blow)) from None
        c0, g0 = c1, g1
        c1, g1, sol1, e1 = trial, g2, sol2, e2
    raise CalibrationError(f"no convergence for r={r_target!r}; last residual {g1:.3e}",
                           bracket=(c0, c1))


@dataclass
class ModulationState:
    """Current modulation parameter ``alpha = u_hat(0, t)`` and its profile."""

    alpha: complex
    profile: SelfSimilarProfile
    t: float


# --------------------------------------------------------------------------
# profile cache


def _key_r(r: float) -> float:
    # a short decimal key keeps |alpha| and |e^{i theta} alpha| on the same profile
    return float(f"{abs(r):.12g}")


class ProfileCache:
    """Calibrated profiles keyed by ``(r, mu, tol, coverage)``.

    Profiles live in memory; with ``directory`` set they are also written as
    ``.npz`` files carrying a version field and re-used only on an exact key
    match.  Access is serialised by a lock, so the cache is safe to share
    across threads.
    """

    def __init__(self, directory=None, tol: float = CALIBRATION_TOL):
        self.directory = Path(directory) if directory is not None else None
        self.tol = tol
        self._mem = {}
        self._lock = threading.Lock()

    def _key(self, r, sign, coverage):
        return (_key_r(r), int(sign), float(self.tol), float(coverage))

    def _path(self, key):
        digest = hashlib.sha256(repr(key).encode()).hexdigest()[:16]
        return self.directory / f"profile-{digest}.npz"

    def get(self, r: float, sign: int, coverage: float = DEFAULT_COVERAGE) -> SelfSimilarProfile:
        key = self._key(r, sign, coverage)
        with self._lock:
            if key in self._mem:
                return self._mem[key]
            prof = self._load(key)
            if prof is None:
                prof = calibrate_amplitude(key[0], key[1], tol=key[2], coverage=key[3])
                self._store(key, prof)
            self._mem[key] = prof
            return prof

    def _load(self, key):
        if self.directory is None:
            return None
        path = self._path(key)
        if not path.exists():
            return None
        with np.load(path) as data:
            if int(data["version"]) != PROFILE_VERSION or tuple(data["key"]) != (
                key[0], float(key[1]), key[2], key[3]
            ):
                return None
            return SelfSimilarProfile(
                int(key[1]), float(data["r"]), 0.0, float(data["c"]), data["y"], data["tau"],
                data["dtau"], data["d2tau"], float(data["mean_error"]),
            )

    def _store(self, key, prof):
        if self.directory is None:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._path(key)
        tmp = path.with_suffix(f".{os.getpid()}.tmp.npz")
        np.savez(
            tmp, version=PROFILE_VERSION, key=np.array([key[0], key[1], key[2], key[3]]),
            r=prof.amplitude_r, c=prof.asymptotic_c, y=prof.y, tau=prof.tau, dtau=prof.dtau,
            d2tau=prof.d2tau, mean_error=prof.mean_error,
        )
        os.replace(tmp, path)  # concurrent writers never expose a partial file

    def entries(self):
        """Keys held in memory plus any profile files on disk."""
        files = sorted(self.directory.glob("profile-*.npz")) if self.directory else []
        return list(self._mem), files

    def clear(self):
        with self._lock:
            self._mem.clear()
            if self.directory is not None:
                for path in self.directory.glob("profile-*.npz"):
                    path.unlink()


DEFAULT_CACHE = ProfileCache()


def _resolve_profile(alpha, sign, profile, cache, coverage):
    if profile is not None:
        return profile.with_phase(float(np.angle(alpha)))
    cache = DEFAULT_CACHE if cache is None else cache
    return cache.get(abs(alpha), sign, coverage).with_phase(float(np.angle(alpha)))


def evaluate_S(alpha: complex, t: float, x, sign: int = 1, profile=None, cache=None,
               coverage: float = DEFAULT_COVERAGE) -> np.ndarray:
    """``S(x, t; alpha)`` at arbitrary points (no taper)."""
    if t <= 0:
        raise DomainError("t must be positive")
    x = np.asarray(x, dtype=float)
    if alpha == 0:
        return np.zeros(x.shape, complex)
    prof = _resolve_profile(alpha, sign, profile, cache, coverage)
    s = t ** (-1.0 / 3.0)
    return s * prof.sigma(s * x)


def build_S(alpha: complex, t: float, grid: Grid, sign: int = 1, profile=None, cache=None,
            coverage: float = DEFAULT_COVERAGE) -> SpatialField:
    """Sample ``S(., t; alpha)`` on ``grid``.

    The profile has to cover ``y = -t^(-1/3) L``; the field is switched off
    smoothly over the far-left quarter of the box so that it is periodic.
    ``meta["exact_region"]`` is the x-interval where no taper is applied.
    """
    if t < 1:
        raise DomainError("self-similar fields are built for t >= 1")
    L = grid.domain_half_length
    out = SpatialField(grid, np.zeros(grid.n_points, complex), t)
    out.meta["exact_region"] = (-TAPER_START * L, L)
    if alpha == 0:
        return out
    prof = _resolve_profile(alpha, sign, profile, cache, coverage)
    s = t ** (-1.0 / 3.0)
    if s * L > prof.coverage:
        raise CoverageError(
            f"grid reaches y={-s * L:.1f} but the profile only covers y >= {-prof.coverage:.1f}"
        )
    x = grid.x
    taper = smooth_step((x + L * 0.98) / (L * (0.98 - TAPER_START)))
    out.values = s * prof.sigma(s * x) * taper
    out.meta["profile_c"] = prof.asymptotic_c
    return out


def check_LS_identity(S: SpatialField, t: float, sign: int, window=None) -> DiagnosticsRecord:
    """Relative residual of ``L S = -mu t |S|^2 S``.

    Norms are restricted to ``window`` (an x-interval; default the untapered
    region of ``S``).  Also reported: the least-squares factor ``k`` in
    ``L S = -k mu t |S|^2 S`` and the residual of the variant with factor 3.
    """
    sign = _check_sign(sign)
    LS = apply_L(S, t).values
    cubic = sign * t * np.abs(S.values) ** 2 * S.values
    lo, hi = window if window is not None else S.meta.get("exact_region", (-np.inf, np.inf))
    mask = (S.grid.x >= lo) & (S.grid.x <= hi)
    dx = S.grid.spacing

    def nrm(v):
        return float(np.sqrt(np.sum(np.abs(v[mask]) ** 2) * dx))

    n_ls, n_cubic = nrm(LS), nrm(cubic)
    rec = DiagnosticsRecord("LS_identity", t)
    if n_ls == 0.0:
        rec.values.update(residual=0.0, fitted_factor=1.0, residual_factor3=0.0, norm_LS=0.0, norm_cubic=0.0)
        return rec
    factor = -float(np.real(np.vdot(cubic[mask], LS[mask])) / np.vdot(cubic[mask], cubic[mask]).real)
    rec.values.update(
        residual=nrm(LS + cubic) / n_ls,
        fitted_factor=factor,
        residual_factor3=nrm(LS + 3.0 * cubic) / n_ls,
        norm_LS=n_ls,
        norm_cubic=n_cubic,
        edge_mass=apply_L(S, t).meta["edge_mass"],
    )
    return rec


def modulation_derivative(alpha: complex, t: float, grid: Grid, sign: int = 1, delta: float = 1e-4,
                          cache=None, coverage: float = DEFAULT_COVERAGE):
    """``(d_r S, d_theta S)`` at ``alpha = r e^{i theta}``.

    ``d_theta S = i S`` exactly; ``d_r S`` is a central difference of
    profiles calibrated at ``r +- delta``.  Below ``r = 2 delta`` a one-sided
    difference is used and the result is flagged ``meta["one_sided"]``.
    """
    cache = DEFAULT_CACHE if cache is None else cache
    r, theta = abs(alpha), float(np.angle(alpha))
    S = build_S(alpha, t, grid, sign, cache=cache, coverage=coverage)
    d_theta = SpatialField(grid, 1j * S.values, t)

    def at(radius):
        prof = cache.get(radius, sign, coverage).with_phase(theta)
        return build_S(radius * np.exp(1j * theta) if radius else 0.0, t, grid, sign,
                       profile=prof, coverage=coverage).values

    if r >= 2 * delta:
        diff = (at(r + delta) - at(r - delta)) / (2 * delta)
        one_sided = False
    else:
        diff = (at(r + delta) - at(r)) / delta
        one_sided = True
    d_r = SpatialField(grid, diff, t)
    d_r.meta["one_sided"] = one_sided
    return d_r, d_theta

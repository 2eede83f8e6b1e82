"""Standalone matplotlib scripts for finished runs.

Each script reads the run's CSV files (absolute paths are written into it)
and saves a PNG next to itself, so it can be run anywhere matplotlib is
installed, without this package.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import LabError
from .io import RunManifest

_PRELUDE = '''import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def table(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    head, body = rows[0], rows[1:]
    return {name: [float(r[i]) for r in body] for i, name in enumerate(head)}


'''

_BODIES = {
    "conserved_drift": (("conserved",), '''d = table(DATA["conserved"])
fig, ax = plt.subplots()
ax.semilogy(d["t"], [abs(v) + 1e-300 for v in d["P_drift"]], label="P")
ax.semilogy(d["t"], [abs(v) + 1e-300 for v in d["E_drift"]], label="E")
ax.set_xlabel("t")
ax.set_ylabel("relative drift")
ax.legend()
'''),
    "decay_envelopes": (("linear_decay",), '''d = table(DATA["linear_decay"])
t = d["t"]
fig, ax = plt.subplots()
ax.loglog(t, d["sup_norm"], label="sup |u|")
ax.loglog(t, d["L6_norm"], label="L6 norm")
ax.loglog(t, [d["sup_norm"][0] * s ** (-1 / 3) for s in t], "k--", label="t^(-1/3)")
ax.loglog(t, [d["L6_norm"][0] * s ** (-5 / 18) for s in t], "k:", label="t^(-5/18)")
ax.set_xlabel("t")
ax.legend()
'''),
    "self_similar_error": (("self_similar",), '''d = table(DATA["self_similar"])
fig, ax = plt.subplots()
ax.loglog(d["t"], d["metric"], "o-")
ax.set_xlabel("t")
ax.set_ylabel("sup |u - S| over |x| <= t^(1/3)")
'''),
    "scattering_overlay": (("left",), '''d = table(DATA["left"])
fig, ax = plt.subplots()
ax.semilogy(d["t"], d["direct"], "o-", label="current profile")
ax.semilogy(d["t"], d["with_B"], "s-", label="earlier profile, phase B")
ax.semilogy(d["t"], d["without_B"], "^-", label="earlier profile, frozen")
ax.set_xlabel("t")
ax.set_ylabel("relative error, left region")
ax.legend()
'''),
    "B_growth": (("scattering",), '''d = table(DATA["scattering"])
fig, ax = plt.subplots()
for xi in sorted(set(d["xi"])):
    rows = [i for i, v in enumerate(d["xi"]) if v == xi]
    ax.semilogx([d["t"][i] for i in rows], [d["B"][i] for i in rows], label=f"xi={xi:.3g}")
ax.set_xlabel("t")
ax.set_ylabel("B(t, xi)")
ax.legend()
'''),
    "three_region": (("final_regions",), '''d = table(DATA["final_regions"])
mod = lambda re, im: [abs(complex(a, b)) for a, b in zip(re, im)]
fig, ax = plt.subplots()
ax.plot(d["x"], mod(d["u_re"], d["u_im"]), "k", label="|u|")
ax.plot(d["x"], mod(d["S_re"], d["S_im"]), "--", label="|S|")
ax.plot(d["x"], mod(d["left_re"], d["left_im"]), ":", label="left formula")
ax.set_xlabel("x")
ax.legend()
'''),
    "beta_sweep": (("aggregate",), '''d = table(DATA["aggregate"])
axis = list(d)[0]
fig, ax = plt.subplots()
ax.plot(d[axis], d["beta"], "o-")
ax.axhline(1 / 6, color="k", ls="--")
ax.set_xlabel(axis)
ax.set_ylabel("fitted beta")
'''),
}

FIGURES = tuple(_BODIES)


def emit_plot_script(source, figure: str) -> Path:
    """Write ``plot_<figure>.py`` for a run manifest or a sweep directory.

    ``source`` is a :class:`RunManifest` or the directory holding a sweep's
    ``aggregate.csv`` (for ``beta_sweep``).  The script is indexed in the
    manifest when there is one.
    """
    if figure not in _BODIES:
        raise LabError(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    needs, body = _BODIES[figure]
    manifest = source if isinstance(source, RunManifest) else None
    root = Path(manifest.directory if manifest else source).resolve()
    if manifest is not None and not manifest.ok:
        raise LabError(f"run in {root} did not succeed ({manifest.status})")
    data, missing = {}, []
    for name in needs:
        path = root / f"{name}.csv"
        indexed = manifest is None or any(f.path == path.name for f in manifest.files)
        if path.exists() and indexed:
            data[name] = str(path)
        else:
            missing.append(f"{name}.csv")
    if missing:
        raise LabError(f"{figure} needs data series that are missing: {', '.join(missing)}")
    target = root / f"plot_{figure}.py"
    png = root / f"{figure}.png"
    text = (_PRELUDE + f"DATA = {data!r}\n\n" + body
            + f"fig.tight_layout()\nfig.savefig({str(png)!r}, dpi=150)\n")
    target.write_text(text)
    if manifest is not None:
        manifest.files = [f for f in manifest.files if f.path != target.name]
        manifest.add(target, "plot")
        manifest.save()
    return target

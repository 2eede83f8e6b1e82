"""Diagnostics containers and log-log exponent fitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass
class DiagnosticsRecord:
    """Time-stamped scalar and curve observables of one check."""

    name: str
    t: float
    values: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    halfwidth: float
    prefactor: float
    n: int


def fit_power_law(t, y, confidence: float = 0.95) -> PowerLawFit:
    """Least-squares fit of ``log y = a + p log t``.

    ``halfwidth`` is the two-sided Student-t confidence half-width of ``p``
    from the residual variance (zero when only two points are given).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (t > 0) & (y > 0) & np.isfinite(y)
    lt, ly = np.log(t[ok]), np.log(y[ok])
    n = lt.size
    if n < 2:
        return PowerLawFit(float("nan"), float("inf"), float("nan"), n)
    res = stats.linregress(lt, ly)
    if n > 2:
        half = stats.t.ppf(0.5 + confidence / 2, n - 2) * res.stderr
    else:
        half = 0.0
    return PowerLawFit(float(res.slope), float(half), float(np.exp(res.intercept)), n)

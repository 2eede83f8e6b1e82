"""Airy group, fundamental solution and linear decay diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma

import numpy as np

from .errors import DomainError
from .records import DiagnosticsRecord, fit_power_law
from .spectral import Grid, SpatialField, SpectralField, fft_coeffs, ifft_values

_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * gamma(2.0 / 3.0))
_AIP0 = 1.0 / (3.0 ** (1.0 / 3.0) * gamma(1.0 / 3.0))
SERIES_LIMIT = 6.0
# on the oscillatory side the optimally truncated expansion is only ~2e-10 accurate at 6
NEGATIVE_SERIES_LIMIT = 7.0
UNDERFLOW_LIMIT = 200.0
_N_SERIES = 90
_N_ASYMP = 40


def _asymptotic_coeffs(n):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    u = np.array(u)
    v = u.copy()
    k = np.arange(1, n)
    v[1:] = -(6 * k + 1) / (6 * k - 1) * u[1:]
    return u, v


_U, _V = _asymptotic_coeffs(_N_ASYMP)


def _maclaurin(x):
    """Power series for (Ai, Ai') about the origin."""
    x3 = x ** 3
    f = np.ones_like(x)
    g = x.copy()
    fp = np.zeros_like(x)
    gp = np.ones_like(x)
    a = np.ones_like(x)  # x^(3k) / prod
    b = x.copy()  # x^(3k+1) / prod
    for k in range(1, _N_SERIES):
        a = a * x3 / ((3 * k - 1) * (3 * k))
        b = b * x3 / ((3 * k) * (3 * k + 1))
        f += a
        g += b
        # derivatives: d/dx x^m = m x^(m-1); avoid dividing by x
        fp += 3 * k * a / np.where(x == 0, 1.0, x) * (x != 0)
        gp += (3 * k + 1) * b / np.where(x == 0, 1.0, x) * (x != 0)
    return _AI0 * f - _AIP0 * g, _AI0 * fp - _AIP0 * gp


def _truncated(terms):
    """Sum the asymptotic terms (axis 0) up to the smallest one."""
    mag = np.abs(terms)
    growing = np.maximum.accumulate(np.diff(mag, axis=0) > 0, axis=0)
    keep = np.concatenate([np.ones((1,) + mag.shape[1:], bool), ~growing], axis=0)
    return np.sum(np.where(keep, terms, 0.0), axis=0)


def _asymptotic_positive(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    k = np.arange(_N_ASYMP)[:, None]
    powers = (-1.0) ** k / zeta[None, :] ** k
    su = _truncated(_U[:, None] * powers)
    sv = _truncated(_V[:, None] * powers)
    pref = np.exp(-zeta) / (2.0 * np.sqrt(np.pi))
    return pref * x ** -0.25 * su, -pref * x ** 0.25 * sv


def _asymptotic_negative(x):
    a = -x
    zeta = 2.0 / 3.0 * a ** 1.5
    k = np.arange(_N_ASYMP // 2)[:, None]
    sgn = (-1.0) ** k
    ev = 2 * k
    od = 2 * k + 1
    pu = _truncated(sgn * _U[ev] / zeta[None, :] ** ev)
    qu = _truncated(sgn * _U[od] / zeta[None, :] ** od)
    pv = _truncated(sgn * _V[ev] / zeta[None, :] ** ev)
    qv = _truncated(sgn * _V[od] / zeta[None, :] ** od)
    s = np.sin(zeta + np.pi / 4)
    c = np.cos(zeta + np.pi / 4)
    ai = (s * pu - c * qu) / (np.sqrt(np.pi) * a ** 0.25)
    aip = -(a ** 0.25) * (c * pv + s * qv) / np.sqrt(np.pi)
    return ai, aip


def airy_pair(x):
    """``(Ai(x), Ai'(x))``; power series on ``[-7, 6]``, asymptotics beyond."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    ai = np.zeros_like(flat)
    aip = np.zeros_like(flat)
    inner = (flat >= -NEGATIVE_SERIES_LIMIT) & (flat <= SERIES_LIMIT)
    right = (flat > SERIES_LIMIT) & (flat <= UNDERFLOW_LIMIT)
    left = flat < -NEGATIVE_SERIES_LIMIT
    if inner.any():
        ai[inner], aip[inner] = _maclaurin(flat[inner])
    if right.any():
        ai[right], aip[right] = _asymptotic_positive(flat[right])
    if left.any():
        ai[left], aip[left] = _asymptotic_negative(flat[left])
    return ai.reshape(x.shape), aip.reshape(x.shape)


def airy_ai(x):
    """Airy function of the first kind (values above x = 200 are clamped to 0)."""
    return airy_pair(x)[0]


def airy_ai_prime(x):
    return airy_pair(x)[1]


def fundamental_solution(x, t):
    """``F(x, t) = (3t)^(-1/3) Ai((3t)^(-1/3) x)``."""
    if not t > 0:
        raise DomainError("fundamental solution needs t > 0")
    s = (3.0 * t) ** (-1.0 / 3.0)
    return s * airy_ai(s * np.asarray(x, dtype=float))


def xi0(x, t):
    """Stationary frequency ``sqrt(|x| / 3t)`` of the linear phase."""
    if not t > 0:
        raise DomainError("xi0 needs t > 0")
    return np.sqrt(np.abs(np.asarray(x, dtype=float)) / (3.0 * t))


# --------------------------------------------------------------------------
# the Airy group


def propagator(grid: Grid, dt: float) -> np.ndarray:
    """Multiplier of ``exp(-dt d_x^3)``: ``exp(i dt xi^3)``."""
    return np.exp(1j * dt * grid.xi ** 3)


def linear_propagate(f: SpectralField, t_from: float, t_to: float) -> SpectralField:
    if t_from < 0 or t_to < 0:
        raise DomainError("propagation times must be non-negative")
    if t_to == t_from:
        return SpectralField(f.grid, f.coeffs.copy(), t_to)
    return SpectralField(f.grid, propagator(f.grid, t_to - t_from) * f.coeffs, t_to)


EDGE_FRACTION = 0.05
EDGE_TOLERANCE = 1e-10


def edge_mass(values: np.ndarray) -> float:
    """Largest modulus in the outer 5% of the box relative to the global max."""
    n = values.size
    m = max(1, int(EDGE_FRACTION * n))
    peak = np.max(np.abs(values), initial=0.0)
    if peak == 0.0:
        return 0.0
    edge = max(np.max(np.abs(values[:m])), np.max(np.abs(values[-m:])))
    return float(edge / peak)


def apply_L(f: SpatialField, t: float) -> SpatialField:
    """``L u = x u - 3 t u_xx`` with a spectral second derivative.

    The result carries ``meta["edge_mass"]`` and ``meta["edge_warning"]``:
    multiplication by the sawtooth coordinate is only meaningful when the
    field has decayed at the seam of the periodic box.
    """
    grid = f.grid
    uxx = ifft_values(grid, -(grid.xi ** 2) * fft_coeffs(grid, f.values))
    out = SpatialField(grid, grid.x * f.values - 3.0 * t * uxx, f.time)
    ratio = edge_mass(f.values)
    out.meta["edge_mass"] = ratio
    out.meta["edge_warning"] = ratio > EDGE_TOLERANCE
    return out


# --------------------------------------------------------------------------
# dispersive decay


def _bracket(z):
    return np.sqrt(1.0 + z * z)


@dataclass
class LinearDecayEnvelope:
    """``t^(-1/3) <x t^(-1/3)>^(-1/4)`` and its derivative counterpart."""

    t: float

    def bound(self, x):
        z = np.asarray(x, dtype=float) * self.t ** (-1.0 / 3.0)
        return self.t ** (-1.0 / 3.0) * _bracket(z) ** -0.25

    def derivative_bound(self, x):
        z = np.asarray(x, dtype=float) * self.t ** (-1.0 / 3.0)
        return self.t ** (-2.0 / 3.0) * _bracket(z) ** 0.25

    def samples(self, x):
        x = np.asarray(x, dtype=float)
        return list(zip(x, self.bound(x)))


def lp_norm(field: SpatialField, p: float) -> float:
    return field.norm(p)


def check_linear_decay(trajectory, p: float = 6.0) -> DiagnosticsRecord:
    """Envelope ratios and L^p decay along a (free) trajectory.

    For every snapshot ``sup |u| / envelope`` and ``sup |u_x| / derivative
    envelope`` are recorded; the summary holds their maxima over time, the
    fitted log-log slope of the ratio (zero for a bounded ratio) and the
    fitted exponent of ``||u||_{L^p}``.
    """
    ts, ratio, dratio, lp = [], [], [], []
    for field in trajectory:
        t = field.time
        env = LinearDecayEnvelope(t)
        grid = field.grid
        ux = ifft_values(grid, 1j * grid.xi * fft_coeffs(grid, field.values))
        ts.append(t)
        ratio.append(float(np.max(np.abs(field.values) / env.bound(grid.x))))
        dratio.append(float(np.max(np.abs(ux) / env.derivative_bound(grid.x))))
        lp.append(field.norm(p))
    ts = np.array(ts)
    ratio = np.array(ratio)
    rec = DiagnosticsRecord(
        name="linear_decay",
        t=float(ts[-1]) if ts.size else 0.0,
        curves={"t": ts, "ratio": ratio, "derivative_ratio": np.array(dratio), "lp_norm": np.array(lp)},
    )
    rec.values["max_ratio"] = float(ratio.max(initial=0.0))
    rec.values["max_derivative_ratio"] = float(np.max(dratio, initial=0.0))
    if ts.size >= 2 and np.all(ratio > 0):
        slope = fit_power_law(ts, ratio)
        rec.values["ratio_slope"] = slope.exponent
        rec.values["ratio_slope_halfwidth"] = slope.halfwidth
        lpfit = fit_power_law(ts, np.array(lp))
        rec.values["lp_exponent"] = lpfit.exponent
        rec.values["lp_exponent_halfwidth"] = lpfit.halfwidth
    else:
        rec.values["ratio_slope"] = 0.0
    return rec

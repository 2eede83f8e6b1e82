"""Region-by-region asymptotics and the four-wave stationary phase.

Space splits at ``x = +- t^(1/3)``: rapid decay on the right, self-similar
behaviour in the middle and modified scattering on the left, where

    f_hat(xi, t) ~ exp(i B(t, xi)) f_inf(xi),
    B(t, xi) = mu sgn(xi) / 6 int_1^t |f_hat(xi, s)|^2 ds / s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    AccuracyError,
    ConfigurationError,
    DomainError,
    RegimeError,
    ResolutionError,
)
from .evolver import zero_mode_rate
from .painleve import evaluate_S
from .quadrature import filon_integrate_2d
from .records import DiagnosticsRecord, PowerLawFit, fit_power_law
from .spectral import Grid, SpatialField, SpectralField, fft_coeffs, ifft_values

REGIONS = ("right_decay", "self_similar", "left_scattering")
EDGE_EXCLUSION = 0.05


# --------------------------------------------------------------------------
# four-wave phase


def phase_phi(xi, eta, sigma, rtol: float = 1e-12):
    """``phi = 3 (eta + sigma)(xi - eta)(xi - sigma)``.

    The expanded polynomial ``(xi - eta - sigma)^3 - xi^3 + eta^3 + sigma^3``
    (with the opposite sign) is evaluated as well and must agree.
    """
    xi, eta, sigma = (np.asarray(v, dtype=float) for v in (xi, eta, sigma))
    factored = 3.0 * (eta + sigma) * (xi - eta) * (xi - sigma)
    expanded = xi ** 3 - eta ** 3 - sigma ** 3 - (xi - eta - sigma) ** 3
    scale = np.maximum(np.abs(xi) + np.abs(eta) + np.abs(sigma), 1e-300) ** 3
    if np.any(np.abs(factored - expanded) > rtol * 30 * scale):
        raise AccuracyError("factored and expanded phase disagree")
    return factored if factored.ndim else float(factored)


def phase_gradient(xi, eta, sigma):
    return (3.0 * (xi - sigma) * (xi - 2.0 * eta - sigma),
            3.0 * (xi - eta) * (xi - eta - 2.0 * sigma))


def phase_hessian(xi, eta, sigma):
    return np.array([[-6.0 * (xi - sigma), -6.0 * (xi - eta - sigma)],
                     [-6.0 * (xi - eta - sigma), -6.0 * (xi - eta)]])


@dataclass
class PhaseGeometry:
    xi: float
    stationary_points: list
    hessian_dets: list
    signatures: list
    phi_values: list
    max_fd_error: float = 0.0


def _numeric_hessian(xi, eta, sigma, h=1e-4):
    def phi(a, b):
        return 3.0 * (a + b) * (xi - a) * (xi - b)

    haa = (phi(eta + h, sigma) - 2 * phi(eta, sigma) + phi(eta - h, sigma)) / h ** 2
    hbb = (phi(eta, sigma + h) - 2 * phi(eta, sigma) + phi(eta, sigma - h)) / h ** 2
    hab = (phi(eta + h, sigma + h) - phi(eta + h, sigma - h) - phi(eta - h, sigma + h)
           + phi(eta - h, sigma - h)) / (4 * h ** 2)
    return np.array([[haa, hab], [hab, hbb]])


def _numeric_gradient(xi, eta, sigma, h=1e-6):
    def phi(a, b):
        return 3.0 * (a + b) * (xi - a) * (xi - b)

    return ((phi(eta + h, sigma) - phi(eta - h, sigma)) / (2 * h),
            (phi(eta, sigma + h) - phi(eta, sigma - h)) / (2 * h))


def phase_geometry(xi: float) -> PhaseGeometry:
    """Stationary points of ``phi(xi, ., .)`` with determinants and signatures.

    Closed forms are cross-checked against finite differences; the largest
    discrepancy is kept in ``max_fd_error``.
    """
    if xi == 0:
        raise DomainError("stationary points coalesce at xi = 0")
    pts = [(xi, xi), (xi, -xi), (-xi, xi), (xi / 3.0, xi / 3.0)]
    dets, sigs, vals = [], [], []
    worst = 0.0
    for eta, sigma in pts:
        hess = phase_hessian(xi, eta, sigma)
        ev = np.linalg.eigvalsh(hess)
        dets.append(float(np.linalg.det(hess)))
        sigs.append(int(np.sum(np.sign(ev))))
        vals.append(float(phase_phi(xi, eta, sigma)))
        scale = max(1.0, abs(xi))
        worst = max(worst,
                    float(np.max(np.abs(_numeric_hessian(xi, eta, sigma) - hess))) / scale,
                    max(abs(g) for g in _numeric_gradient(xi, eta, sigma)) / scale ** 2)
    return PhaseGeometry(float(xi), pts, dets, sigs, vals, worst)


# --------------------------------------------------------------------------
# region reports


@dataclass
class RegionReport:
    region: str
    t: float
    metric: float
    fit_exponent: float | None = None
    fit_halfwidth: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.region not in REGIONS:
            raise ConfigurationError(f"unknown region {self.region!r}")


def region_masks(grid: Grid, t: float):
    """Boolean masks of the three x-regions (boundaries belong to both sides)."""
    edge = t ** (1.0 / 3.0)
    x = grid.x
    return {
        "right_decay": x >= edge,
        "self_similar": np.abs(x) <= edge,
        "left_scattering": x <= -edge,
    }


def _interior(grid: Grid):
    # drop the outer strip of the periodic box
    return np.abs(grid.x) <= (1.0 - EDGE_EXCLUSION) * grid.domain_half_length


def right_region_check(u: SpatialField, t: float, epsilon: float) -> RegionReport:
    """``sup_{x >= t^(1/3)} |u| t^(1/3) (x t^(-1/3))^(3/4) / epsilon``."""
    if t < 1:
        raise DomainError("t must be at least 1")
    grid = u.grid
    mask = region_masks(grid, t)["right_decay"] & _interior(grid)
    if epsilon == 0 or not mask.any():
        return RegionReport("right_decay", t, 0.0)
    z = grid.x[mask] * t ** (-1.0 / 3.0)
    metric = float(np.max(np.abs(u.values[mask]) * t ** (1.0 / 3.0) * z ** 0.75) / epsilon)
    return RegionReport("right_decay", t, metric)


def self_similar_check(u: SpatialField, alpha: complex, t: float, sign: int = 1, profile=None,
                       cache=None) -> RegionReport:
    """``sup_{|x| <= t^(1/3)} |u - S(x, t; alpha)|``."""
    grid = u.grid
    mask = region_masks(grid, t)["self_similar"]
    x = grid.x[mask]
    S = evaluate_S(alpha, t, x, sign, profile=profile, cache=cache)
    metric = float(np.max(np.abs(u.values[mask] - S), initial=0.0))
    return RegionReport("self_similar", t, metric, extra={"alpha": complex(alpha)})


def fit_reports(reports, t_min: float = -np.inf, t_max: float = np.inf) -> PowerLawFit:
    """Power-law fit of ``metric`` against ``t`` over ``[t_min, t_max]``."""
    t = np.array([r.t for r in reports])
    m = np.array([r.metric for r in reports])
    keep = (t >= t_min - 1e-9) & (t <= t_max + 1e-9)
    return fit_power_law(t[keep], m[keep])


# --------------------------------------------------------------------------
# modified scattering


@dataclass
class ScatteringState:
    """Phase ``B(t, xi)`` accumulated on the grid frequencies.

    ``v = exp(-i B) f_hat`` tends to ``f_inf``; ``f_infinity_estimate`` is the
    latest ``v`` and ``cauchy_tail`` the spread of ``v`` over ``[T/2, T]``.
    """

    grid: Grid
    sign: int
    t: float
    B_values: np.ndarray
    v_values: np.ndarray
    cauchy_tail: np.ndarray
    history: list = field(default_factory=list, repr=False)
    _density: np.ndarray = field(default=None, repr=False)

    @property
    def xi_grid(self) -> np.ndarray:
        return self.grid.xi

    @property
    def f_infinity_estimate(self) -> np.ndarray:
        return self.v_values

    @classmethod
    def start(cls, f_hat: SpectralField, sign: int) -> "ScatteringState":
        grid = f_hat.grid
        zero = np.zeros(grid.n_points)
        st = cls(grid, sign, f_hat.time, zero, f_hat.coeffs.copy(), zero.copy())
        st._density = np.abs(f_hat.coeffs) ** 2
        st.history.append((st.t, st.B_values, st.v_values))
        return st

    def _entry(self, t: float):
        for entry in self.history:
            if abs(entry[0] - t) <= 1e-9 * max(1.0, t):
                return entry
        raise ConfigurationError(f"B was not recorded at t={t}")

    def B_at(self, t: float) -> np.ndarray:
        return self._entry(t)[1]

    def prediction(self, t: float, use_B: bool = True, reference: float | None = None) -> np.ndarray:
        """Profile at ``t`` predicted from the state at ``reference`` (default ``t``).

        With ``B`` the estimate ``v(reference)`` of ``f_inf`` is rotated by
        ``exp(i B(t))``; without it the profile is frozen at ``f_hat(reference)``.
        """
        ref_t, ref_B, ref_v = self._entry(t if reference is None else reference)
        if use_B:
            return np.exp(1j * self.B_at(t)) * ref_v
        return np.exp(1j * ref_B) * ref_v


def accumulate_B(scattering: ScatteringState, f_hat: SpectralField, dt_log: float | None = None,
                 sign: int | None = None) -> ScatteringState:
    """Advance ``B`` to ``f_hat.time`` with the trapezoid rule in ``log t``."""
    sign = scattering.sign if sign is None else sign
    if dt_log is None:
        if f_hat.time < scattering.t:
            raise ConfigurationError("snapshots must be ordered in t")
        dt_log = np.log(f_hat.time / scattering.t)
    density = np.abs(f_hat.coeffs) ** 2
    sgn = np.sign(scattering.grid.xi)
    scattering.B_values = scattering.B_values + sign * sgn / 12.0 * (scattering._density + density) * dt_log
    scattering._density = density
    scattering.t = f_hat.time
    scattering.v_values = np.exp(-1j * scattering.B_values) * f_hat.coeffs
    scattering.history.append((scattering.t, scattering.B_values, scattering.v_values))
    recent = np.array([v for (time, _, v) in scattering.history if time >= scattering.t / 2.0 - 1e-9])
    scattering.cauchy_tail = np.max(np.abs(recent - recent[-1]), axis=0)
    return scattering


def left_prediction(grid: Grid, fhat: np.ndarray, t: float, x: np.ndarray) -> np.ndarray:
    """Two stationary points ``+-xi0`` of the linear phase at the given ``x < 0``."""
    xi0 = np.sqrt(-x / (3.0 * t))
    spline_re, spline_im = _spectrum_splines(grid, fhat)
    out = np.zeros(x.shape, complex)
    for nu in (1, -1):
        fv = spline_re(nu * xi0) + 1j * spline_im(nu * xi0)
        out += (6.0 * t * xi0) ** -0.5 * np.exp(-2j * nu * t * xi0 ** 3 + 1j * nu * np.pi / 4) * fv
    return out


def _spectrum_splines(grid: Grid, coeffs: np.ndarray):
    freq = grid.frequencies
    ordered = np.fft.fftshift(coeffs)
    return CubicSpline(freq, ordered.real), CubicSpline(freq, ordered.imag)


def left_region_check(u: SpatialField, f_hat: SpectralField, scattering: ScatteringState | None,
                      t: float, use_B: bool = True, window=(1.0, 4.0),
                      reference: float | None = None) -> RegionReport:
    """Relative sup error of the modified-scattering formula on the left.

    The window is ``-3 t a^2 <= x <= -b t^(1/3)`` for ``window = (a, b)``,
    i.e. stationary frequencies ``xi0`` between ``sqrt(b/3) t^(-1/3)`` and
    ``a``.  With ``scattering`` the formula is fed ``exp(i B(t)) f_inf``
    built from the snapshot at ``reference`` (or that snapshot's ``f_hat``,
    frozen, when ``use_B`` is false); otherwise it uses ``f_hat`` itself.
    """
    grid = u.grid
    a, b = window
    if a * 1.05 > grid.xi_max * 2.0 / 3.0:
        raise ResolutionError(f"xi0 up to {a} is not resolved by the grid")
    x_lo, x_hi = -3.0 * t * a * a, -b * t ** (1.0 / 3.0)
    if x_lo < -(1.0 - EDGE_EXCLUSION) * grid.domain_half_length:
        raise ResolutionError("left window reaches the edge of the box")
    mask = (grid.x >= x_lo) & (grid.x <= x_hi)
    x = grid.x[mask]
    fhat = f_hat.coeffs if scattering is None else scattering.prediction(t, use_B, reference)
    pred = left_prediction(grid, fhat, t, x)
    actual = u.values[mask]
    peak = np.max(np.abs(actual), initial=0.0)
    metric = 0.0 if peak == 0.0 else float(np.max(np.abs(actual - pred)) / peak)
    return RegionReport("left_scattering", t, metric, extra={"use_B": use_B, "window": (x_lo, x_hi),
                                                                 "reference": reference})


# --------------------------------------------------------------------------
# the profile ODE


def _spectrum_callable(f_hat):
    if callable(f_hat):
        return f_hat
    re, im = _spectrum_splines(f_hat.grid, f_hat.coeffs)
    lo, hi = f_hat.grid.frequencies[0], f_hat.grid.frequencies[-1]

    def fn(z):
        z = np.asarray(z, dtype=float)
        inside = (z >= lo) & (z <= hi)
        zc = np.clip(z, lo, hi)
        return np.where(inside, re(zc) + 1j * im(zc), 0.0)

    return fn


def hamiltonian_rhs(xi: float, t: float, f_hat, sign: int) -> complex:
    """Leading large-``t`` form of ``d f_hat / dt`` at ``xi``.

    The three degenerate stationary points combine into the Hamiltonian term
    ``mu i sgn(xi) |f_hat(xi)|^2 f_hat(xi) / (6 t)``; the non-degenerate point
    ``(xi/3, xi/3)`` adds

        mu i sgn(xi) exp(i pi/2 sgn(xi)) exp(-8 i t xi^3 / 9)
            f_hat(xi/3)^2 conj(f_hat(-xi/3)) / (3 sqrt(12) t).
    """
    if abs(xi) < t ** (-1.0 / 3.0):
        raise RegimeError("|xi| < t^(-1/3) belongs to the zero-mode regime")
    fn = _spectrum_callable(f_hat)
    s = np.sign(xi)
    f0 = complex(fn(np.array([xi]))[0])
    f3 = complex(fn(np.array([xi / 3.0]))[0])
    f3m = complex(fn(np.array([-xi / 3.0]))[0])
    main = sign * 1j * s / (6.0 * t) * abs(f0) ** 2 * f0
    osc = (sign * 1j * s * np.exp(0.5j * np.pi * s) * np.exp(-8j * t * xi ** 3 / 9.0)
           * f3 ** 2 * np.conj(f3m) / (3.0 * np.sqrt(12.0) * t))
    return complex(main + osc)


def spectral_support(f_hat, threshold: float = 1e-6, probe: float = 20.0) -> float:
    """Half-width ``K`` beyond which ``|f_hat| < threshold * max|f_hat|``."""
    if callable(f_hat):
        z = np.linspace(-probe, probe, 8001)
        mag = np.abs(f_hat(z))
    else:
        z, ordered = f_hat.ordered()
        mag = np.abs(ordered)
    peak = mag.max(initial=0.0)
    if peak == 0.0:
        return 0.0
    big = np.nonzero(mag >= threshold * peak)[0]
    return float(max(abs(z[big[0]]), abs(z[big[-1]])))


def stationary_phase_oracle(xi: float, t: float, f_hat, sign: int, rtol: float = 1e-3,
                            threshold: float = 1e-6, max_nodes: float = 4e7) -> complex:
    """Direct 2-D quadrature of the profile equation's right-hand side

        mu i / (2 pi) int int exp(-i t phi) (xi - eta - sigma)
            f_hat(eta) conj(f_hat(-sigma)) f_hat(xi - eta - sigma) d eta d sigma.

    ``f_hat`` is a :class:`SpectralField` (interpolated by cubic splines) or a
    vectorised callable.  The box is the numerical support of ``f_hat``.
    """
    fn = _spectrum_callable(f_hat)
    K = spectral_support(f_hat, threshold)
    if K == 0.0:
        return 0.0 + 0.0j

    def amplitude(eta, sigma):
        rest = xi - eta - sigma
        return rest * fn(eta) * np.conj(fn(-sigma)) * fn(rest)

    def phase(eta, sigma):
        return -t * 3.0 * (eta + sigma) * (xi - eta) * (xi - sigma)

    def grad(eta, sigma):
        g1, g2 = phase_gradient(xi, eta, sigma)
        return -t * g1, -t * g2

    # panels fine enough that the phase curvature per panel is O(1)
    curvature = 6.0 * t * (abs(xi) + 2.0 * K)
    n0 = int(2 ** np.ceil(np.log2(max(16.0, 2.0 * K * np.sqrt(curvature) / 2.0))))
    value, _ = filon_integrate_2d(amplitude, phase, grad, (-K, K, -K, K), rtol=rtol,
                                  n_panels=n0, max_nodes=max_nodes)
    return complex(sign * 1j / (2.0 * np.pi) * value)


# --------------------------------------------------------------------------
# zero mode and the X norm


def zero_mode_decay_check(trajectory, sign: int, t_min: float = 10.0, t_max: float = np.inf,
                          profile_check: bool = True, cache=None) -> DiagnosticsRecord:
    """``|d/dt u_hat(0, t)|`` per snapshot with a fitted decay exponent.

    With ``profile_check`` the mean of ``|S|^2 S_x`` is evaluated for the
    last modulation parameter on a grid adapted to the profile.
    """
    ts, rates, alphas = [], [], []
    for snap in trajectory:
        ts.append(snap.t)
        rates.append(zero_mode_rate(snap.field, sign))
        alphas.append(snap.zero_mode)
    ts = np.array(ts)
    mag = np.abs(np.array(rates))
    rec = DiagnosticsRecord("zero_mode", float(ts[-1]) if ts.size else 0.0,
                            curves={"t": ts, "rate": np.array(rates), "alpha": np.array(alphas)})
    keep = (ts >= t_min) & (ts <= t_max)
    if np.count_nonzero(keep & (mag > 0)) >= 2:
        fit = fit_power_law(ts[keep], mag[keep])
        rec.values.update(exponent=fit.exponent, exponent_halfwidth=fit.halfwidth)
    else:
        rec.values.update(exponent=float("nan"), exponent_halfwidth=float("nan"))
    rec.values["max_rate"] = float(mag.max(initial=0.0))
    if profile_check and alphas:
        rec.values["S_mean_flux"] = S_flux(alphas[-1], float(ts[-1]), sign, cache=cache)
    return rec


def S_flux(alpha: complex, t: float, sign: int, cache=None, y_extent: float = 40.0) -> float:
    """``|int |S|^2 S_x dx|`` on a tapered periodic box covering ``|y| <= y_extent``.

    The integrand is ``d/dx (tau^3) / 3`` up to a constant phase, so the mean
    vanishes up to quadrature error.
    """
    from .painleve import build_S

    if alpha == 0:
        return 0.0
    L = y_extent * t ** (1.0 / 3.0) / 0.75
    grid = Grid(8192, L)
    S = build_S(alpha, t, grid, sign, cache=cache)
    Sx = ifft_values(grid, 1j * grid.xi * fft_coeffs(grid, S.values))
    return float(abs(np.sum(np.abs(S.values) ** 2 * Sx) * grid.spacing))


def x_norm(f_hat: SpectralField, t: float) -> float:
    """``||f_hat||_inf + t^(-1/6) ||x f||_2``."""
    grid = f_hat.grid
    f = ifft_values(grid, f_hat.coeffs)
    xf = float(np.sqrt(np.sum(np.abs(grid.x * f) ** 2) * grid.spacing))
    return float(np.max(np.abs(f_hat.coeffs), initial=0.0)) + t ** (-1.0 / 6.0) * xf

"""Integrating-factor RK4 for ``u_t + u_xxx = mu |u|^2 u_x``.

The unknown is the profile ``f_hat = exp(-i t xi^3) u_hat``, which obeys

    d f_hat / dt = mu exp(-i t xi^3) F[ |u|^2 u_x ],

so the dispersive part is handled exactly and classical RK4 is applied to
a non-stiff right-hand side (the Lawson scheme).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowupError, ConfigurationError
from .spectral import SQRT_2PI, Grid, SpatialField, SpectralField, fft_coeffs, ifft_values

BLOWUP_FACTOR = 1e3


@dataclass(frozen=True)
class ConservedSet:
    """Momentum ``P``, twist ``W`` and energy ``E``.

    ``E = int |u_x|^2 / 2 + mu |u|^4 / 12``, so ``mu = -1`` is focusing.
    """

    P: float
    W: float
    E: float


def _derivative_hat(grid: Grid, uhat):
    d = 1j * grid.xi * uhat
    d[grid.nyquist_index] = 0.0
    return d


def _nonlinear_hat(grid: Grid, uhat, sign):
    """Dealiased ``mu F[|u|^2 u_x]`` from (masked) ``u_hat``."""
    u = ifft_values(grid, uhat)
    ux = ifft_values(grid, _derivative_hat(grid, uhat))
    return sign * grid.dealias_mask * fft_coeffs(grid, np.abs(u) ** 2 * ux)


def nonlinearity(u: SpatialField, sign: int) -> SpatialField:
    grid = u.grid
    uhat = grid.dealias_mask * fft_coeffs(grid, u.values)
    return SpatialField(grid, ifft_values(grid, _nonlinear_hat(grid, uhat, sign)), u.time)


def conserved_quantities(u: SpatialField, sign: int) -> ConservedSet:
    grid = u.grid
    dx = grid.spacing
    ux = ifft_values(grid, _derivative_hat(grid, fft_coeffs(grid, u.values)))
    dens = np.abs(u.values) ** 2
    P = float(np.sum(dens) * dx)
    W = float(np.sum(np.imag(np.conj(u.values) * ux)) * dx)
    # the quartic weight mu/12 is the one this normalisation actually conserves
    E = float(np.sum(0.5 * np.abs(ux) ** 2 + sign / 12.0 * dens ** 2) * dx)
    return ConservedSet(P, W, E)


def zero_mode_rate(u: SpatialField, sign: int) -> complex:
    """``d/dt u_hat(0, t) = mu (2 pi)^(-1/2) int |u|^2 u_x dx``."""
    grid = u.grid
    ux = ifft_values(grid, _derivative_hat(grid, fft_coeffs(grid, u.values)))
    return complex(sign * np.sum(np.abs(u.values) ** 2 * ux) * grid.spacing / SQRT_2PI)


@dataclass
class EvolverState:
    field: SpatialField
    profile_hat: SpectralField
    t: float
    sign: int
    step_count: int = 0
    conserved: ConservedSet | None = None
    zero_mode: complex = 0.0

    @classmethod
    def from_profile(cls, grid: Grid, fhat, t: float, sign: int, step_count: int = 0, phase=None):
        fhat = grid.dealias_mask * np.asarray(fhat, dtype=complex)
        if phase is None:
            phase = linear_phase(grid, t)
        uhat = phase * fhat
        u = SpatialField(grid, ifft_values(grid, uhat), t)
        return cls(u, SpectralField(grid, fhat, t), t, sign, step_count, zero_mode=complex(uhat[0]))

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def u_hat(self) -> np.ndarray:
        return linear_phase(self.grid, self.t) * self.profile_hat.coeffs

    def with_diagnostics(self) -> "EvolverState":
        self.conserved = conserved_quantities(self.field, self.sign)
        return self


def linear_phase(grid: Grid, t: float) -> np.ndarray:
    """``exp(i t xi^3)``, the multiplier taking ``f_hat`` to ``u_hat``."""
    return np.exp(1j * t * grid.xi_cubed)


def profile_rhs(grid: Grid, t: float, fhat, sign: int, phase=None):
    if phase is None:
        phase = linear_phase(grid, t)
    return np.conj(phase) * _nonlinear_hat(grid, phase * fhat, sign)


def _rk4(grid, t, f, dt, sign):
    e0 = linear_phase(grid, t)
    half = linear_phase(grid, 0.5 * dt)
    em = e0 * half
    e1 = em * half
    k1 = profile_rhs(grid, t, f, sign, e0)
    k2 = profile_rhs(grid, t, f + 0.5 * dt * k1, sign, em)
    k3 = profile_rhs(grid, t, f + 0.5 * dt * k2, sign, em)
    k4 = profile_rhs(grid, t, f + dt * k3, sign, e1)
    return f + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), e1


def step(state: EvolverState, dt: float, amplitude_cap: float = np.inf) -> EvolverState:
    """One RK4 step of the profile equation; raises :class:`BlowupError`."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    grid = state.grid
    f, phase = _rk4(grid, state.t, state.profile_hat.coeffs, dt, state.sign)
    new = EvolverState.from_profile(grid, f, state.t + dt, state.sign, state.step_count + 1, phase)
    peak = np.max(np.abs(new.field.values))
    if not np.all(np.isfinite(f)) or peak > amplitude_cap:
        raise BlowupError(f"solution left the admissible range at t={new.t:.6g}", last_state=state)
    return new


def advance(state: EvolverState, t_to: float, dt: float, amplitude_cap: float = np.inf,
            callback=None) -> EvolverState:
    """Step from ``state.t`` to exactly ``t_to`` with steps of at most ``dt``."""
    span = t_to - state.t
    if span < 0:
        raise ConfigurationError("cannot integrate backwards")
    if span == 0:
        return state
    n = int(np.ceil(span / dt - 1e-9))
    h = span / n
    t0 = state.t
    for i in range(n):
        t_next = t_to if i == n - 1 else t0 + (i + 1) * h
        state = step(state, t_next - state.t, amplitude_cap)
        if callback is not None:
            callback(state)
    return state


def geometric_schedule(t_final: float, ratio: float, extra=()) -> np.ndarray:
    """``1, ratio, ratio^2, ...`` up to ``t_final`` (included), merged with ``extra``."""
    if ratio <= 1:
        raise ConfigurationError("snapshot ratio must exceed 1")
    if t_final < 1:
        raise ConfigurationError("t_final must be at least 1")
    n = int(np.floor(np.log(t_final) / np.log(ratio) + 1e-9))
    times = ratio ** np.arange(n + 1)
    times = np.concatenate([times, [t_final], [t for t in extra if 1 <= t <= t_final]])
    times = np.unique(np.round(times, 12))
    return times


class Trajectory(list):
    """Snapshots of one evolution; ``status`` is ``"ok"`` or ``"failed"``."""

    def __init__(self, items=(), status="ok", error=None):
        super().__init__(items)
        self.status = status
        self.error = error

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self])

    def fields(self):
        return [s.field for s in self]


def evolve_profile(grid: Grid, fhat0, sign: int, t_final: float, dt: float, times=None,
                   ratio: float = 2 ** 0.25, callback=None) -> Trajectory:
    """Evolve from ``t = 1`` with ``f_hat(1) = fhat0``; snapshots at ``times``."""
    if sign not in (1, -1):
        raise ConfigurationError("sign must be +1 or -1")
    if times is None:
        times = geometric_schedule(t_final, ratio)
    state = EvolverState.from_profile(grid, fhat0, 1.0, sign).with_diagnostics()
    peak0 = np.max(np.abs(state.field.values))
    cap = BLOWUP_FACTOR * peak0 if peak0 > 0 else np.inf
    traj = Trajectory()
    for target in times:
        try:
            state = advance(state, float(target), dt, cap, callback)
        except BlowupError as exc:
            traj.status, traj.error = "failed", exc
            return traj
        traj.append(state.with_diagnostics())
    return traj


def evolve(config) -> Trajectory:
    """Run a :class:`~cmkdv_lab.lab.config.RunConfig` and return its snapshots.

    The configuration supplies ``u_*``; since ``u(1) = exp(-d_x^3) u_*``,
    the profile at ``t = 1`` is simply ``u_hat_*``.
    """
    grid = config.make_grid()
    fhat0 = config.initial_spectrum(grid)
    times = geometric_schedule(config.t_final, config.snapshot_ratio, config.extra_times)
    return evolve_profile(grid, fhat0, config.sign, config.t_final, config.dt, times)

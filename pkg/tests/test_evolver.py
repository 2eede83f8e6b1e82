import numpy as np
import pytest

from cmkdv_lab.airy import linear_propagate
from cmkdv_lab.errors import BlowupError, ConfigurationError
from cmkdv_lab.evolver import (
    EvolverState,
    advance,
    conserved_quantities,
    evolve_profile,
    geometric_schedule,
    linear_phase,
    nonlinearity,
    step,
    zero_mode_rate,
)
from cmkdv_lab.initial_data import initial_spectrum
from cmkdv_lab.spectral import Grid, SpatialField, SpectralField, fft_coeffs


@pytest.fixture(scope="module")
def grid():
    return Grid(512, 100.0)


def profile_of(grid, values):
    """Profile at t = 1 of a field given in physical space."""
    return np.conj(linear_phase(grid, 1.0)) * fft_coeffs(grid, values)


def final(grid, f0, t, dt, sign=1):
    return evolve_profile(grid, f0, sign, t, dt, times=[t])[-1]


def test_zero_data_stays_zero(grid):
    out = final(grid, np.zeros(grid.n_points, complex), 3.0, 0.1)
    assert np.all(out.profile_hat.coeffs == 0)
    assert out.conserved.P == 0.0


def test_tiny_data_follow_the_linear_flow(grid):
    f0 = initial_spectrum(grid, "gaussian", 1e-6, 1.0)
    out = final(grid, f0, 4.0, 0.1)
    lin = linear_propagate(SpectralField(grid, f0), 0.0, 4.0)
    np.testing.assert_allclose(fft_coeffs(grid, out.field.values), lin.coeffs, atol=1e-17)


def test_real_data_stay_real(grid):
    f0 = initial_spectrum(grid, "gaussian", 0.5, 1.0)
    out = final(grid, f0, 3.0, 0.05)
    assert np.max(np.abs(out.field.values.imag)) < 1e-15


def test_phase_rotation_and_conjugation(grid):
    f0 = initial_spectrum(grid, "modulated_gaussian", 0.5, 1.0, k0=0.8)
    base = final(grid, f0, 3.0, 0.05).field.values
    rotated = final(grid, np.exp(1.1j) * f0, 3.0, 0.05).field.values
    np.testing.assert_allclose(rotated, np.exp(1.1j) * base, atol=1e-14)
    # real coefficients: conj(u) solves the same equation
    conj_data = profile_of(grid, np.conj(EvolverState.from_profile(grid, f0, 1.0, 1).field.values))
    conj_out = final(grid, conj_data, 3.0, 0.05).field.values
    np.testing.assert_allclose(conj_out, np.conj(base), atol=1e-14)


def test_translation(grid):
    f0 = initial_spectrum(grid, "modulated_gaussian", 0.5, 1.0, k0=0.5)
    shift = 16
    u0 = EvolverState.from_profile(grid, f0, 1.0, 1).field.values
    moved = profile_of(grid, np.roll(u0, shift))
    a = final(grid, f0, 2.5, 0.05).field.values
    b = final(grid, moved, 2.5, 0.05).field.values
    np.testing.assert_allclose(b, np.roll(a, shift), atol=1e-13)


def test_fourth_order_ladder(grid):
    f0 = initial_spectrum(grid, "gaussian", 0.1, 1.0)
    ref = final(grid, f0, 3.0, 0.000625).profile_hat.coeffs
    errs = [np.linalg.norm(final(grid, f0, 3.0, dt).profile_hat.coeffs - ref) for dt in (0.01, 0.005, 0.0025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(16.0, rel=0.1)


@pytest.mark.parametrize("sign", [1, -1])
def test_conservation(grid, sign):
    f0 = initial_spectrum(grid, "modulated_gaussian", 0.3, 1.0, k0=0.4)
    traj = evolve_profile(grid, f0, sign, 20.0, 0.02)
    c0 = traj[0].conserved
    for s in traj:
        assert abs(s.conserved.P - c0.P) / c0.P < 1e-10
        assert abs(s.conserved.E - c0.E) / abs(c0.E) < 1e-9
        assert abs(s.conserved.W - c0.W) / abs(c0.W) < 1e-9


def test_energy_quartic_weight(grid):
    # E for a constant-modulus plane wave: |u_x|^2/2 + mu |u|^4/12 per unit length
    u = SpatialField(grid, 0.3 * np.exp(1j * grid.xi[3] * grid.x))
    c = conserved_quantities(u, -1)
    length = 2 * grid.domain_half_length
    assert c.E == pytest.approx(length * (0.5 * 0.09 * grid.xi[3] ** 2 - 0.3 ** 4 / 12))
    assert c.P == pytest.approx(length * 0.09)


def test_zero_mode_rate_against_finite_difference(grid):
    f0 = initial_spectrum(grid, "modulated_gaussian", 0.5, 1.0, k0=0.3)
    state = EvolverState.from_profile(grid, f0, 2.0, 1)
    rate = zero_mode_rate(state.field, 1)
    h = 1e-3
    one = advance(state, 2.0 + h, h / 4).zero_mode
    two = advance(state, 2.0 + 2 * h, h / 4).zero_mode
    # second-order one-sided difference
    fd = (-3 * state.zero_mode + 4 * one - two) / (2 * h)
    assert abs(rate) > 1e-4
    assert abs(fd - rate) < 1e-6 * abs(rate)


def test_zero_mode_rate_matches_nonlinearity(grid):
    f0 = initial_spectrum(grid, "modulated_gaussian", 0.5, 1.0, k0=0.3)
    u = EvolverState.from_profile(grid, f0, 1.5, -1).field
    n_hat = fft_coeffs(grid, nonlinearity(u, -1).values)
    assert n_hat[0] == pytest.approx(zero_mode_rate(u, -1), rel=1e-10)


def test_real_data_have_no_zero_mode_drift(grid):
    f0 = initial_spectrum(grid, "gaussian", 0.5, 1.0)
    u = EvolverState.from_profile(grid, f0, 3.0, 1).field
    assert abs(zero_mode_rate(u, 1)) < 1e-16


def test_blowup_guard(grid):
    f0 = initial_spectrum(grid, "gaussian", 0.5, 1.0)
    state = EvolverState.from_profile(grid, f0, 1.0, 1)
    with pytest.raises(BlowupError) as info:
        step(state, 0.1, amplitude_cap=1e-3)
    assert info.value.last_state is state
    bad = state.profile_hat.coeffs.copy()
    bad[3] = np.nan
    with pytest.raises(BlowupError):
        step(EvolverState.from_profile(grid, bad, 1.0, 1), 0.1)


def test_step_and_advance_validation(grid):
    state = EvolverState.from_profile(grid, np.zeros(grid.n_points), 2.0, 1)
    with pytest.raises(ConfigurationError):
        step(state, 0.0)
    with pytest.raises(ConfigurationError):
        advance(state, 1.0, 0.1)
    assert advance(state, 2.0, 0.1) is state
    out = advance(state, 2.35, 0.1)
    assert out.t == 2.35
    assert out.step_count == 4
    with pytest.raises(ConfigurationError):
        evolve_profile(grid, np.zeros(grid.n_points), 0, 2.0, 0.1)


def test_geometric_schedule():
    times = geometric_schedule(300.0, 2 ** 0.25, extra=(50.0, 500.0))
    assert times[0] == 1.0 and times[-1] == 300.0
    assert 50.0 in times and 500.0 not in times
    assert 256.0 in times
    assert np.all(np.diff(times) > 0)
    with pytest.raises(ConfigurationError):
        geometric_schedule(10.0, 1.0)
    with pytest.raises(ConfigurationError):
        geometric_schedule(0.5, 2.0)


def test_trajectory_times(grid):
    traj = evolve_profile(grid, initial_spectrum(grid, "gaussian", 0.1, 1.0), 1, 4.0, 0.1)
    np.testing.assert_allclose(traj.times, geometric_schedule(4.0, 2 ** 0.25))
    assert traj.status == "ok" and len(traj.fields()) == len(traj)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from cmkdv_lab.airy import (
    LinearDecayEnvelope,
    airy_ai,
    airy_ai_prime,
    airy_pair,
    apply_L,
    check_linear_decay,
    edge_mass,
    fundamental_solution,
    linear_propagate,
    xi0,
)
from cmkdv_lab.errors import DomainError
from cmkdv_lab.quadrature import filon_integrate
from cmkdv_lab.spectral import Grid, SpatialField, SpectralField, forward_ft, inverse_ft, smooth_step


def test_ai_at_zero():
    # independent closed form 3^(-2/3) / Gamma(2/3)
    assert airy_ai(0.0) == pytest.approx(0.3550280538878172, abs=1e-15)
    assert airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), abs=1e-15)


def test_against_reference_library():
    x = np.concatenate([np.linspace(-60, 60, 4001), [-7.0, 6.0, -7.0001, 6.0001]])
    ai, aip = airy_pair(x)
    ref_ai, ref_aip, _, _ = special.airy(x)
    assert np.max(np.abs(ai - ref_ai)) < 1e-10
    assert np.max(np.abs(aip - ref_aip) / np.maximum(1, np.abs(x)) ** 0.25) < 1e-10


def test_series_and_asymptotics_overlap():
    # both branches evaluated across the switch point agree
    from cmkdv_lab.airy import _asymptotic_negative, _asymptotic_positive, _maclaurin

    for x in (5.5, 6.0, 6.5):
        s = _maclaurin(np.array([x]))
        a = _asymptotic_positive(np.array([x]))
        assert abs(s[0][0] - a[0][0]) < 1e-12
        assert abs(s[1][0] - a[1][0]) < 1e-11
    for x in (-7.0, -7.5):
        s = _maclaurin(np.array([x]))
        a = _asymptotic_negative(np.array([x]))
        assert abs(s[0][0] - a[0][0]) < 1e-11
        assert abs(s[1][0] - a[1][0]) < 1e-10


@pytest.mark.parametrize("x", [-5.0, 0.0, 5.0])
def test_airy_ode(x):
    h = 1e-2
    f = airy_ai(x + h * np.arange(-2, 3))
    second = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    assert abs(second - x * f[2]) < 1e-8


def test_decay_on_the_right():
    x = np.linspace(2, 200, 5000)
    ai = airy_ai(x)
    assert np.all(ai >= 0)
    assert np.all(np.diff(ai) <= 0)
    assert airy_ai(250.0) == 0.0


def test_fundamental_solution_basics():
    assert fundamental_solution(0.0, 1 / 3) == pytest.approx(airy_ai(0.0), abs=1e-15)
    x = np.linspace(-10, 10, 7)
    np.testing.assert_allclose(fundamental_solution(2 * x, 8.0), 0.5 * fundamental_solution(x, 1.0),
                               atol=1e-14)
    with pytest.raises(DomainError):
        fundamental_solution(1.0, 0.0)


def test_fundamental_solution_mass():
    # smooth cut-off of the oscillatory left tail; trapezoid converges spectrally
    W = 200.0
    x = np.linspace(-3 * W, 40, 2_000_001)
    window = 1 - smooth_step((-x - W) / W)
    mass = np.sum(fundamental_solution(x, 1.0) * window) * (x[1] - x[0])
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_xi0():
    assert xi0(-3.0, 1.0) == pytest.approx(1.0)
    assert xi0(0.0, 2.0) == 0.0
    assert xi0(-12.0, 1.0) == pytest.approx(2 * xi0(-3.0, 1.0))
    with pytest.raises(DomainError):
        xi0(1.0, 0.0)


@pytest.fixture
def gaussian():
    # spectrum sqrt(2) exp(-xi^2): negligible beyond |xi| = 6, so up to t = 10
    # the solution stays inside |x| <= 3 t 36
    grid = Grid(8192, 2048.0)
    return forward_ft(SpatialField(grid, np.exp(-grid.x ** 2 / 4)))


def test_propagator_identity_and_unitarity(gaussian):
    same = linear_propagate(gaussian, 2.0, 2.0)
    np.testing.assert_array_equal(same.coeffs, gaussian.coeffs)
    out = linear_propagate(gaussian, 1.0, 7.0)
    assert out.norm() == pytest.approx(gaussian.norm(), rel=1e-14)
    with pytest.raises(DomainError):
        linear_propagate(gaussian, -1.0, 1.0)


def test_group_law(gaussian):
    a = linear_propagate(linear_propagate(gaussian, 1.0, 2.5), 2.5, 4.0)
    b = linear_propagate(gaussian, 1.0, 4.0)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-14


def airy_quadrature(x, t, spectrum, half_width):
    """``(2 pi)^(-1/2) int spectrum(xi) exp(i(x xi + t xi^3)) d xi`` by Filon panels."""
    val, _ = filon_integrate(spectrum, lambda s: x * s + t * s ** 3, lambda s: x + 3 * t * s ** 2,
                             -half_width, half_width, rtol=1e-11, atol=1e-14)
    return val / np.sqrt(2 * np.pi)


def test_narrow_gaussian_against_quadrature():
    grid = Grid(8192, 1024.0)
    u0 = SpatialField(grid, np.exp(-4 * grid.x ** 2))  # u_hat = exp(-xi^2 / 16) / sqrt(8)
    u = inverse_ft(linear_propagate(forward_ft(u0), 0.0, 2.0)).values
    xs = np.arange(-200, 40, 8)
    idx = [int(np.argmin(np.abs(grid.x - x))) for x in xs]
    ref = np.array([airy_quadrature(grid.x[i], 2.0, lambda s: np.exp(-s * s / 16) / np.sqrt(8), 28.0)
                    for i in idx])
    assert np.max(np.abs(u[idx] - ref)) / np.max(np.abs(ref)) < 1e-6


def test_apply_L_commutation(gaussian):
    grid = gaussian.grid
    x_f = forward_ft(SpatialField(grid, grid.x * inverse_ft(gaussian).values))
    for t in (1.0, 10.0):
        lhs = apply_L(inverse_ft(linear_propagate(gaussian, 0.0, t)), t)
        rhs = inverse_ft(linear_propagate(x_f, 0.0, t))
        err = np.linalg.norm(lhs.values - rhs.values) / np.linalg.norm(rhs.values)
        assert err < 1e-8
        assert not lhs.meta["edge_warning"]


def test_apply_L_at_t0_is_multiplication(gaussian):
    u = inverse_ft(gaussian)
    np.testing.assert_allclose(apply_L(u, 0.0).values, u.grid.x * u.values, atol=1e-15)


def test_apply_L_symbolic():
    # L applied to exp(-a x^2): x g - 3t (4a^2 x^2 - 2a) g
    grid = Grid(2048, 40.0)
    a, t = 0.3, 2.0
    g = np.exp(-a * grid.x ** 2)
    expected = grid.x * g - 3 * t * (4 * a * a * grid.x ** 2 - 2 * a) * g
    out = apply_L(SpatialField(grid, g), t)
    assert np.max(np.abs(out.values - expected)) < 1e-8


def test_apply_L_edge_warning():
    grid = Grid(256, 10.0)
    out = apply_L(SpatialField(grid, np.ones(grid.n_points)), 1.0)
    assert out.meta["edge_warning"]
    assert edge_mass(np.zeros(4)) == 0.0


def test_envelope():
    env = LinearDecayEnvelope(8.0)
    x = np.linspace(-100, 100, 11)
    assert np.all(env.bound(x) > 0)
    np.testing.assert_allclose(env.bound(x), env.bound(-x))
    assert env.bound(0.0) == pytest.approx(0.5)
    assert env.derivative_bound(0.0) == pytest.approx(0.25)
    assert len(env.samples(x)) == 11


def test_linear_decay_free_gaussian():
    grid = Grid(16384, 4096.0)
    f = forward_ft(SpatialField(grid, np.exp(-grid.x ** 2)))
    times = 2.0 ** np.arange(0, 6.75, 0.5)
    traj = [inverse_ft(linear_propagate(f, 0.0, t)) for t in times]
    rec = check_linear_decay(traj, p=6)
    late = check_linear_decay([u for u in traj if u.time >= 10], p=6)
    assert abs(late["ratio_slope"]) < 0.02
    assert rec["max_ratio"] < 1.0
    # bounded L6 norm after the t^(-1/3 + 1/18) rescaling
    scaled = [u.norm(6) * u.time ** (1 / 3 - 1 / 18) for u in traj]
    assert max(scaled) / min(scaled) < 2.0


def test_linear_decay_zero_field():
    grid = Grid(64, 10.0)
    rec = check_linear_decay([SpatialField(grid, np.zeros(64), 1.0), SpatialField(grid, np.zeros(64), 2.0)])
    assert rec["max_ratio"] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-40, max_value=40))
def test_pair_matches_reference(x):
    ai, aip = airy_pair(np.array([x]))
    ref = special.airy(x)
    assert abs(ai[0] - ref[0]) < 1e-10
    assert abs(aip[0] - ref[1]) < 1e-10 * max(1.0, abs(x)) ** 0.25


def test_mollified_delta_gives_fundamental_solution():
    grid = Grid(4096, 256.0)
    cut = 4.0
    spectrum = (1 - smooth_step((np.abs(grid.xi) - cut) / cut)) / np.sqrt(2 * np.pi)
    u = inverse_ft(linear_propagate(SpectralField(grid, spectrum), 0.0, 1.0)).values
    window = (grid.x >= -20) & (grid.x <= 10)
    F = fundamental_solution(grid.x[window], 1.0)
    assert np.max(np.abs(u[window] - F)) / np.max(np.abs(F)) < 1e-3
    assert airy_ai_prime(0.0) == pytest.approx(-0.2588194037928068, abs=1e-15)

import numpy as np
import pytest
from scipy.special import airy

from cmkdv_lab.errors import CalibrationError, ConfigurationError, CoverageError, DomainError
from cmkdv_lab.painleve import (
    AIRY_SCALE,
    LINEAR_SLOPE,
    ProfileCache,
    build_S,
    calibrate_amplitude,
    check_LS_identity,
    evaluate_S,
    integrate_profile,
    modulation_derivative,
    profile_mean,
)
from cmkdv_lab.spectral import SQRT_2PI, Grid


@pytest.fixture(scope="module")
def profiles():
    return {(r, s): calibrate_amplitude(r, s) for r in (0.1, 0.3) for s in (1, -1)}


def grid_for(t, extent=40.0):
    return Grid(8192, extent * t ** (1 / 3) / 0.75)


@pytest.mark.parametrize("r", [0.1, 0.3])
@pytest.mark.parametrize("sign", [1, -1])
def test_calibration_and_residuals(profiles, r, sign):
    p = profiles[r, sign]
    assert abs(p.mean() - r) < 1e-8
    assert p.residual_third() < 1e-8
    assert p.residual_second() < 1e-6


def test_linear_limit_slope():
    # small c: tau is the Airy function and its mean follows from int Ai = 1
    c = 1e-6
    m, _ = profile_mean(integrate_profile(c, 1))
    assert m / c == pytest.approx(LINEAR_SLOPE, rel=1e-6)
    assert LINEAR_SLOPE == pytest.approx(3 ** (1 / 3) / SQRT_2PI)
    y = np.linspace(-30, 20, 11)
    sol = integrate_profile(c, 1)
    np.testing.assert_allclose(np.interp(y, sol.y, sol.tau), c * airy(AIRY_SCALE * y)[0], atol=1e-14)


def test_focusing_changes_the_amplitude(profiles):
    # same mean, different nonlinearity sign: the asymptotic constants differ
    assert profiles[0.3, 1].asymptotic_c != pytest.approx(profiles[0.3, -1].asymptotic_c, rel=1e-3)


def test_zero_amplitude():
    p = calibrate_amplitude(0.0, 1)
    assert p.asymptotic_c == 0.0
    assert np.all(p.tau_at(np.linspace(-10, 10, 5)) == 0)
    assert np.all(evaluate_S(0.0, 3.0, np.linspace(-5, 5, 7)) == 0)


def test_invalid_arguments():
    with pytest.raises(DomainError):
        calibrate_amplitude(-0.1, 1)
    with pytest.raises(ConfigurationError):
        calibrate_amplitude(0.1, 2)
    with pytest.raises(DomainError):
        evaluate_S(0.1, 0.0, 1.0)


def test_amplitude_range_and_iteration_budget():
    with pytest.raises(DomainError):
        calibrate_amplitude(1.5, 1)
    with pytest.raises(CalibrationError) as info:
        calibrate_amplitude(0.3, 1, tol=1e-30, max_iter=2)
    assert len(info.value.bracket) == 2


def test_phase_equivariance(profiles):
    x = np.linspace(-30, 10, 41)
    theta = 0.7
    base = evaluate_S(0.3, 5.0, x, profile=profiles[0.3, 1])
    rotated = evaluate_S(0.3 * np.exp(1j * theta), 5.0, x, profile=profiles[0.3, 1])
    np.testing.assert_allclose(rotated, np.exp(1j * theta) * base, atol=1e-15)


def test_self_similar_scaling(profiles):
    p = profiles[0.1, 1]
    x = np.linspace(-20, 8, 29)
    lam = 2.0
    np.testing.assert_allclose(evaluate_S(0.1, lam ** 3 * 4.0, lam * x, profile=p),
                               evaluate_S(0.1, 4.0, x, profile=p) / lam, atol=1e-15)


def test_LS_identity_and_growth(profiles):
    p = profiles[0.1, 1]
    norms = []
    for t in (1.0, 8.0, 64.0):
        S = build_S(0.1, t, grid_for(t), profile=p)
        rec = check_LS_identity(S, t, 1)
        assert rec["residual"] < 1e-5
        assert rec["fitted_factor"] == pytest.approx(1.0, abs=1e-6)
        assert rec["residual_factor3"] > 1.0
        norms.append(rec["norm_LS"])
    # ||LS||_2 grows like t^(1/6)
    assert norms[1] / norms[0] == pytest.approx(8 ** (1 / 6), rel=0.01)
    assert norms[2] / norms[1] == pytest.approx(8 ** (1 / 6), rel=0.01)


def test_build_S_coverage_and_taper(profiles):
    p = profiles[0.1, 1]
    with pytest.raises(CoverageError):
        build_S(0.1, 1.0, Grid(1024, 400.0), profile=p)
    with pytest.raises(DomainError):
        build_S(0.1, 0.5, Grid(1024, 40.0), profile=p)
    g = grid_for(8.0)
    S = build_S(0.1, 8.0, g, profile=p)
    lo, hi = S.meta["exact_region"]
    inside = (g.x >= lo) & (g.x <= hi)
    np.testing.assert_allclose(S.values[inside], evaluate_S(0.1, 8.0, g.x[inside], profile=p), atol=1e-15)
    assert abs(S.values[0]) == 0.0


def test_mass_of_S_is_alpha(profiles):
    # u_hat(0) of the self-similar field recovers alpha
    p = profiles[0.3, -1]
    y = np.linspace(-160, 24, 400001)
    weight = 1 - np.clip((-y - 60) / 60, 0, 1) ** 2 * (3 - 2 * np.clip((-y - 60) / 60, 0, 1))
    assert np.trapezoid(p.tau_at(y) * weight, y) / SQRT_2PI == pytest.approx(0.3, abs=2e-3)


def test_modulation_derivative(profiles, tmp_path):
    cache = ProfileCache(tmp_path)
    g = grid_for(2.0)
    alpha = 0.3 * np.exp(0.4j)
    d_r, d_theta = modulation_derivative(alpha, 2.0, g, cache=cache)
    S = build_S(alpha, 2.0, g, cache=cache)
    np.testing.assert_allclose(d_theta.values, 1j * S.values)
    assert not d_r.meta["one_sided"]
    # linear regime: S is proportional to r, so d_r S ~ S / r
    small, _ = modulation_derivative(1e-4, 2.0, g, cache=cache, delta=1e-4)
    assert small.meta["one_sided"]
    S_small = build_S(1e-4, 2.0, g, cache=cache)
    np.testing.assert_allclose(small.values, S_small.values / 1e-4, rtol=1e-3, atol=1e-9)


def test_cache_round_trip(tmp_path):
    cache = ProfileCache(tmp_path)
    p = cache.get(0.05, 1)
    keys, files = cache.entries()
    assert len(keys) == 1 and len(files) == 1
    assert not list(tmp_path.glob("*.tmp.npz"))
    fresh = ProfileCache(tmp_path)
    q = fresh.get(0.05, 1)
    np.testing.assert_array_equal(p.tau, q.tau)
    assert q.asymptotic_c == p.asymptotic_c
    # |alpha| and a rotated alpha share a profile
    assert fresh.get(abs(0.05 * np.exp(2j)), 1) is q
    fresh.clear()
    assert fresh.entries() == ([], [])


def test_cache_ignores_other_versions(tmp_path):
    cache = ProfileCache(tmp_path)
    cache.get(0.05, 1)
    path = cache.entries()[1][0]
    with np.load(path) as data:
        body = dict(data)
    body["version"] = 99
    np.savez(path, **body)
    other = ProfileCache(tmp_path)
    assert other._load(other._key(0.05, 1, 170.0)) is None

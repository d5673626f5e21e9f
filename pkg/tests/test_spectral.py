import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sddpde.spectral import HALF_PI, Spectrum, l2_norm, mode

SP = Spectrum(16, 0.5)
coeffs = arrays(np.float64, 16, elements=st.floats(-10, 10, allow_nan=False))


def test_eigenvalues_are_squares():
    lam = SP.eigenvalues
    assert lam[0] == 1.0
    assert np.all(np.diff(lam) > 0)
    np.testing.assert_array_equal(lam, np.arange(1, 17) ** 2)


@pytest.mark.parametrize("delta", [0.0, 1.0, 1.5, -0.1])
def test_delta_must_sit_below_first_eigenvalue(delta):
    with pytest.raises(ValueError):
        Spectrum(4, delta)


def test_apply_A_examples():
    np.testing.assert_array_equal(SP.apply_A(mode(1, 16)), mode(1, 16))
    np.testing.assert_array_equal(SP.apply_A(mode(2, 16)), 4 * mode(2, 16))
    np.testing.assert_array_equal(SP.apply_A(np.zeros(16)), np.zeros(16))


def test_semigroup_examples():
    u = mode(1, 16) + mode(3, 16)
    np.testing.assert_array_equal(SP.apply_semigroup(0.0, u), u)
    np.testing.assert_allclose(SP.apply_semigroup(1.0, mode(1, 16)), np.exp(-1) * mode(1, 16), rtol=1e-15)
    expect = np.exp(-0.5) * mode(1, 16) + np.exp(-4.5) * mode(3, 16)
    np.testing.assert_allclose(SP.apply_semigroup(0.5, u), expect, rtol=1e-15)


def test_frac_power_examples():
    u = np.random.default_rng(0).standard_normal(16)
    np.testing.assert_allclose(SP.apply_frac_power(0.5, mode(2, 16)), 2 * mode(2, 16))
    np.testing.assert_array_equal(SP.apply_frac_power(0.0, u), u)
    np.testing.assert_allclose(SP.apply_frac_power(1.0, u), SP.apply_A(u), rtol=1e-14)


def test_semigroup_norm_bound_examples():
    assert SP.semigroup_norm_bound(0.0, 1.0) == pytest.approx(np.exp(-1), rel=1e-14)
    brute = max(k * k * np.exp(-0.1 * k * k) for k in range(1, 17))
    assert SP.semigroup_norm_bound(1.0, 0.1) == pytest.approx(brute, rel=1e-14)
    assert SP.semigroup_norm_bound(1.0, 0.1) == pytest.approx(9 * np.exp(-0.9), rel=1e-14)
    t = 30.0
    assert SP.semigroup_norm_bound(0.5, t) == pytest.approx(np.exp(-t), rel=1e-12)


def test_fit_C_alpha_examples():
    grid = SP.default_t_grid
    assert SP.fit_C_alpha(0.0, grid) == pytest.approx(1.0, rel=1e-12)
    assert Spectrum(16, 1e-12).fit_C_alpha(0.0, grid) == pytest.approx(1.0, abs=1e-9)
    # brute-force oracle over a continuous lambda and a dense t grid
    t = np.geomspace(1e-3, 10, 2000)[:, None]
    lam = np.linspace(1, 256, 4000)[None, :]
    brute = float(np.max(t * lam * np.exp(-(lam - 0.5) * t)))
    fit = SP.fit_C_alpha(1.0, np.geomspace(1e-3, 10, 2000))
    assert abs(fit - brute) / brute < 0.05


@given(u=coeffs)
def test_parseval(u):
    x = np.linspace(0, np.pi, 20001)
    vals = SP.synthesize(u, x)
    w = np.full(x.size, x[1] - x[0])
    w[[0, -1]] *= 0.5
    assert l2_norm(u) ** 2 == pytest.approx(float(w @ vals**2), rel=1e-6, abs=1e-9)
    assert l2_norm(u) ** 2 == pytest.approx(HALF_PI * float(u @ u), rel=1e-14, abs=1e-300)


@given(u=coeffs, s=st.floats(0, 2), t=st.floats(0, 2))
def test_semigroup_law(u, s, t):
    lhs = SP.apply_semigroup(s, SP.apply_semigroup(t, u))
    rhs = SP.apply_semigroup(s + t, u)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


@given(u=coeffs, a=st.floats(0, 0.5), b=st.floats(0, 0.5))
def test_fractional_powers_compose(u, a, b):
    lhs = SP.apply_frac_power(a, SP.apply_frac_power(b, u))
    np.testing.assert_allclose(lhs, SP.apply_frac_power(a + b, u), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0])
@pytest.mark.parametrize("delta", [0.1, 0.5, 0.9])
def test_smoothing_estimate_on_log_grid(alpha, delta):
    sp = Spectrum(16, delta)
    t = np.geomspace(1e-4, 10, 200)
    C = sp.fit_C_alpha(alpha, t)
    lhs = sp.semigroup_norm_bound(alpha, t)
    assert np.all(lhs <= C * t ** (-alpha) * np.exp(-delta * t) * (1 + 1e-12))


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_semigroup_minus_identity_estimate(alpha, rng):
    t = np.geomspace(1e-4, 10, 200)
    C = SP.fit_C_alpha(1 - alpha, t) if alpha < 1 else SP.fit_C_alpha(0.0, t)
    lam = SP.eigenvalues
    for _ in range(20):
        v = rng.standard_normal(16) / np.arange(1, 17) ** rng.uniform(0, 3)
        u = v / l2_norm(SP.apply_frac_power(alpha, v))
        gap = np.array([l2_norm(SP.apply_semigroup(tt, u) - u) for tt in t])
        assert np.all(gap <= (1 / alpha) * C * t**alpha * (1 + 1e-12))
    assert lam.size == 16

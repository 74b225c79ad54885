import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cubictrace.errors import InvalidQuery, NotSquarefree
from cubictrace.special import gaussian_h, zero_h
from cubictrace.weyl import (
    compute_nd,
    d_mu_l,
    density,
    fejer_h,
    localized_h,
    nd_bound,
    tanh_moment,
    truncated_main,
    weyl_main,
    weyl_main_per_M,
)


def test_fejer_hat_normalisation_and_support():
    h = fejer_h()
    assert float(h.hat(0.0)) == pytest.approx(1.0, rel=1e-13)
    xs = np.array([0.99, 1.0, 1.5, -0.995])
    assert np.all(h.hat(xs) == 0)
    assert float(h.hat(0.98)) > 0
    with pytest.raises(InvalidQuery):
        fejer_h(beta=1.0)


@pytest.mark.parametrize("xi", [0.0, 0.2, 0.5, 0.9])
def test_fejer_hat_is_fourier_transform(xi):
    h = fejer_h(order=3, beta=0.9)
    f = lambda x: float(np.real(h(np.array([x]))[0])) * math.cos(x * xi)  # noqa: E731
    val = 0.0
    for a in range(0, 4000, 20):
        v, _ = integrate.quad(f, a, a + 20, limit=200, epsabs=1e-15)
        val += v
    assert 2 * val == pytest.approx(float(h.hat(xi)), abs=1e-9)


def test_fejer_nonnegative_on_axes():
    h = fejer_h()
    t = np.linspace(-200, 200, 4001)
    assert np.all(np.real(h(t)) >= 0)
    assert np.all(np.real(h(1j * np.linspace(0, 10, 50))) > 0)
    h.validate()


@given(st.floats(0, 20), st.floats(1, 4), st.floats(-30, 30))
def test_localized_even(mu, L, z):
    loc = localized_h(gaussian_h(), mu, L)
    assert complex(loc(z)) == pytest.approx(complex(loc(-z)), abs=1e-14)


def test_localized_examples():
    g = gaussian_h()
    loc0 = localized_h(g, 0.0, 2.0)
    for z in (0.0, 0.3, 1.7):
        assert complex(loc0(z)) == pytest.approx(2 * complex(g(2 * z)))
    loc = localized_h(g, 5.0, 2.0)
    assert complex(loc(5.0)).real == pytest.approx(1 + math.exp(-400))
    with pytest.raises(InvalidQuery):
        localized_h(g, 1.0, 0.5)
    with pytest.raises(InvalidQuery):
        localized_h(g, -1.0, 2.0)


def test_d_mu_l_zero_and_scaling():
    assert d_mu_l(3, localized_h(zero_h(), 5, 2))[0] == 0
    loc = localized_h(fejer_h(), 10.0, 2.0)
    d1, maj1 = d_mu_l(1, loc)
    d6, maj6 = d_mu_l(6, loc)
    assert d6 == pytest.approx(36 * d1, rel=1e-14)
    assert maj6 == pytest.approx(36 * (5 + 0.25))
    with pytest.raises(NotSquarefree):
        d_mu_l(4, loc)


@pytest.mark.parametrize("mu,L", [(30.0, 2.0), (60.0, 1.0), (40.0, 3.0)])
def test_d_mu_l_large_mu_asymptotic(mu, L):
    """Far from t = 0, tanh = 1 and the mass of h at scale 1/L gives N^2 mu / (pi^2 L)."""
    loc = localized_h(fejer_h(), mu, L)
    d, _ = d_mu_l(1, loc)
    assert d == pytest.approx(mu / (math.pi**2 * L), rel=1e-6)


@pytest.mark.parametrize("T", [0.5, 3.0, 10.0, 40.0])
def test_tanh_moment_closed_form(T):
    # int_{-T}^T t tanh(pi t) dt = T^2 - 1/12 + O(T e^{-2 pi T})
    if T >= 3:
        assert tanh_moment(T) == pytest.approx(T * T - 1 / 12, abs=1e-6 * T)
    ref, _ = integrate.quad(lambda t: t * math.tanh(math.pi * t), -T, T, limit=400, epsabs=1e-14)
    assert tanh_moment(T) == pytest.approx(ref, rel=1e-12)


def test_truncated_main():
    assert truncated_main(5, 0.0) == 0
    assert truncated_main(5, 50.0) / weyl_main_per_M(5, 50.0) == pytest.approx(1 - 1 / (12 * 2500), rel=1e-12)
    with pytest.raises(InvalidQuery):
        truncated_main(5, -1.0)


def test_weyl_constants():
    assert weyl_main(1, 1.0) == pytest.approx(1 / (2 * math.pi**2))
    assert weyl_main(6, 2.0) == pytest.approx(36 * 2 * 4 / (2 * math.pi**2))
    assert weyl_main(7, 3.0) == pytest.approx(6 * weyl_main_per_M(7, 3.0))
    assert density(1) == 1
    assert density(6) == pytest.approx(1 / 9)
    assert density(30) == pytest.approx(64 / 900)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1.0, 3.0), st.floats(1.0, 3.0), st.floats(0.5, 100))
def test_nd_bound_monotone_in_L(m1, m2, L1, L2, mu):
    lo, hi = sorted((L1, L2))
    a = nd_bound(m1, m2, 2, mu, lo)
    b = nd_bound(m1, m2, 2, mu, hi)
    assert a.value <= b.value
    assert a.threshold_mu <= b.threshold_mu


def test_nd_bound_threshold():
    b = nd_bound(1, 1, 2, 100.0, 1.0)
    assert b.threshold_mu == pytest.approx(math.pi / 4 * math.exp(math.pi + 1))
    assert b.negligible
    assert not nd_bound(1, 1, 2, 10.0, 1.0).negligible
    with pytest.raises(InvalidQuery):
        nd_bound(1, 1, 2, 0.0, 1.0)


def test_nd_sum_below_bound_at_one_point():
    nd = compute_nd(1, 1, 2, 1, 60.0, 1.0)
    assert nd.truncation_c >= 24
    assert abs(nd.total) <= nd_bound(1, 1, 2, 60.0, 1.0).value

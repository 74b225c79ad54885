import cmath
import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubictrace import arith
from cubictrace.errors import DomainError, InvalidQuery
from cubictrace.rankin import (
    HolomorphicKind,
    MaassKind,
    SatakePair,
    arch_section,
    hecke_power_sums,
    inner_product,
    inner_product_constant,
    k_product_integral,
    phi_hat_constant,
    ramified_residue_factor,
    residue_bookkeeping,
    rs_arch_holomorphic,
    rs_arch_maass,
    rs_local_ramified,
    rs_local_unramified,
    whittaker_diag,
)

mp.mp.dps = 20


def test_satake_pair():
    sp = SatakePair.from_lambda(1.3)
    assert abs(sp.alpha1 * sp.alpha2 - 1) < 1e-14
    assert sp.lam() == pytest.approx(1.3)
    assert sp.is_sane(5)
    assert not SatakePair(3.0, 1 / 3).is_sane(2)
    with pytest.raises(InvalidQuery):
        SatakePair(2.0, 2.0)


def test_whittaker_values():
    sp = SatakePair.from_angle(0.7)
    assert whittaker_diag(3, sp, 0) == 1
    assert whittaker_diag(3, sp, -1) == 0
    lam = 2 * math.cos(0.7)
    assert whittaker_diag(3, sp, 2) == pytest.approx((lam * lam - 1) / 3, abs=1e-15)
    # enumeration of alpha1^a alpha2^b with a + b = 3
    a1, a2 = sp.alpha1, sp.alpha2
    enum = sum(a1**a * a2 ** (3 - a) for a in range(4))
    assert complex(hecke_power_sums(sp, 3)[3]) == pytest.approx(enum, abs=1e-14)


@given(st.sampled_from([2, 3, 5, 7, 11]), st.floats(0.05, 3.0), st.floats(1.05, 4.0))
def test_unramified_local_factor(p, theta, s):
    sp = SatakePair.from_angle(theta)
    r = rs_local_unramified(s, p, sp)
    assert r.rel_diff < 1e-12
    # own series with lambda(p^m) = sin((m+1) theta) / sin(theta)
    X = p ** (-s)
    ser = math.fsum((math.sin((m + 1) * theta) / math.sin(theta)) ** 2 * X**m for m in range(400))
    assert complex(r.closed).real == pytest.approx(ser / (1 - X * X), rel=1e-12)
    assert complex(rs_local_unramified(s, p, sp.swapped()).closed) == pytest.approx(complex(r.closed), rel=1e-14)


def test_unramified_real_satake_parameters():
    # lambda(p) = 2.01 is outside [-2, 2]: Satake parameters real, still inside the p^{7/64} window at p = 7
    sp = SatakePair.from_lambda(2.01)
    assert sp.is_sane(7)
    assert rs_local_unramified(1.5, 7, sp).rel_diff < 1e-12
    with pytest.raises(DomainError):
        rs_local_unramified(0.9, 7, sp)


@pytest.mark.parametrize("p,expected", [(2, Fraction(1, 12)), (3, Fraction(1, 36)), (5, Fraction(1, 150))])
def test_ramified_local_factor(p, expected):
    r = rs_local_ramified(1.0, p)
    assert r.closed == expected
    assert complex(r.independent) == pytest.approx(float(expected))
    with pytest.raises(InvalidQuery):
        rs_local_ramified(1.0, 6)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.5, 1 + 2j])
def test_arch_section(s):
    r = arch_section(s)
    assert r.rel_diff < 1e-12
    assert complex(r.closed) == pytest.approx(complex(mp.pi ** (-s) * mp.gamma(s)), rel=1e-13)


def test_holomorphic_archimedean_factor():
    r = rs_arch_holomorphic(1, 2)
    assert complex(r.closed) == pytest.approx(4.0**-3 * 6 / math.pi**5, rel=1e-14)
    for s, k in ((1.5, 3), (1.0, 6), (2 + 1j, 2)):
        assert rs_arch_holomorphic(s, k).rel_diff < 1e-10
    # Gamma recurrence in s
    k, s = 3, 1.3
    ratio = complex(rs_arch_holomorphic(s + 1, k).closed) / complex(rs_arch_holomorphic(s, k).closed)
    assert ratio == pytest.approx(s * (s + 2 * k - 1) / (4 * math.pi**2), rel=1e-13)


def test_maass_archimedean_factor():
    s = 1.4
    r0 = rs_arch_maass(s, 0.0)
    assert complex(r0.closed) == pytest.approx(float(mp.pi ** (-2 * s) * mp.gamma(s / 2) ** 4), rel=1e-13)
    r = rs_arch_maass(1.2, 0.8)
    assert r.rel_diff < 1e-7
    assert complex(rs_arch_maass(1.2, -0.8).closed) == pytest.approx(complex(r.closed), rel=1e-14)


@pytest.mark.parametrize("s,mu,nu", [(2.0, 0.3, 0.1), (1.5, 0.0, 0.5), (3.0, 1.0, 1.0)])
def test_k_product_integral_real_orders(s, mu, nu):
    r = k_product_integral(s, mu, nu)
    ref = mp.quad(lambda y: mp.besselk(mu, y) * mp.besselk(nu, y) * y ** (s - 1), [0, 1, 5, 20, mp.inf])
    assert r.rel_diff < 1e-10
    assert complex(r.closed).real == pytest.approx(float(ref), rel=1e-10)


def test_k_product_integral_imaginary_orders():
    s, t = 1.3, 0.6
    r = k_product_integral(s, 1j * t, -1j * t)
    ref = mp.quad(lambda y: mp.re(mp.besselk(1j * t, y)) ** 2 * y ** (s - 1), [0, 1, 5, 20, 60])
    assert r.rel_diff < 1e-8
    assert complex(r.independent).real == pytest.approx(float(ref), rel=1e-8)
    with pytest.raises(DomainError):
        k_product_integral(0.5, 0.4, 0.3)


def test_inner_product_constants():
    assert inner_product_constant(HolomorphicKind(2)) == pytest.approx(4.0**-3 * math.pi**-5 * 6)
    assert inner_product_constant(MaassKind(0.0)) == 1
    assert inner_product_constant(MaassKind(1.0)) == pytest.approx(1 / math.cosh(math.pi))
    assert inner_product(HolomorphicKind(2), 6, 0.5) == pytest.approx(
        2 * 0.5 * (2 / 3) * (3 / 4) * inner_product_constant(HolomorphicKind(2)))
    with pytest.raises(InvalidQuery):
        inner_product_constant("cusp")


def test_phi_hat_constant():
    assert phi_hat_constant(1) == 1
    assert phi_hat_constant(2) == Fraction(1, 16)
    assert phi_hat_constant(6) == Fraction(1, 648)
    assert ramified_residue_factor(2) == Fraction(1, 24)


@settings(max_examples=30)
@given(st.sampled_from([N for N in range(1, 31) if arith.is_squarefree(N)]))
def test_residue_bookkeeping(N):
    b = residue_bookkeeping(N)
    assert b.holds
    expected = Fraction(1)
    for p in arith.prime_divisors(N):
        expected *= Fraction(p - 1, p**3 * (p + 1))
    assert b.residue_from_local == expected


def test_residue_bookkeeping_all_levels():
    assert all(residue_bookkeeping(N).holds for N in range(1, 31) if arith.is_squarefree(N))


def test_sanity_of_exp_conventions():
    assert abs(SatakePair.from_angle(0.3).alpha1 - cmath.exp(0.3j)) < 1e-15

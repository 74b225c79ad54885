import cmath
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cubictrace import arith
from cubictrace.errors import InsufficientPrecision
from cubictrace.localpadic import (
    LocalTestSpec,
    Matrix2Local,
    PAdicApprox,
    eval_f,
    eval_f_twisted,
    local_kloosterman,
    orbital_first_local,
    orbital_second_local_bruteforce,
    orbital_second_local_central,
    orbital_second_local_closed,
    orbital_second_unramified,
    orbital_second_unramified_bruteforce,
)

PRIMES = (2, 3, 5, 7)


def psi_tilde_sum(p, B, C):
    return sum(cmath.exp(-2j * math.pi * (B * l + C * pow(l, -1, p)) / p) for l in range(1, p))


@pytest.mark.parametrize("p", PRIMES)
def test_eval_f_identity_and_central_invariance(p):
    spec = LocalTestSpec(p, 1)
    g = Matrix2Local.from_rationals(p, 1, 0, 0, 1)
    assert eval_f(spec, g) == pytest.approx((p + 1) * (p - 1))
    assert eval_f(spec, g.scale(p)) == pytest.approx((p + 1) * (p - 1))
    assert eval_f(spec, g.scale(Fraction(1, p**3))) == pytest.approx((p + 1) * (p - 1))


@pytest.mark.parametrize("p", PRIMES)
def test_eval_f_support(p):
    spec = LocalTestSpec(p, 1)
    assert eval_f(spec, Matrix2Local.from_rationals(p, 1, 0, p, 1)) == 0
    assert eval_f(spec, Matrix2Local.from_rationals(p, 1, Fraction(1, p * p), 0, 1)) == 0
    assert eval_f(spec, Matrix2Local.from_rationals(p, p, 0, 0, 1)) == 0


@pytest.mark.parametrize("p", PRIMES)
def test_eval_f_character_sum(p):
    for m in range(1, p):
        spec = LocalTestSpec(p, m)
        for b in range(p):
            for c in range(p):
                g = Matrix2Local.from_rationals(p, 1, Fraction(b, p), c * p * p, 1)
                assert eval_f(spec, g) == pytest.approx((p + 1) * psi_tilde_sum(p, b, m * c), abs=1e-9)


@given(st.sampled_from(PRIMES), st.integers(-3, 3), st.integers(0, 10**6), st.integers(0, 10**6))
def test_eval_f_central_invariance_random(p, shift, b, c):
    spec = LocalTestSpec(p, 1)
    g = Matrix2Local.from_rationals(p, 1 + p, Fraction(b, p), c * p * p, 1, precision=8)
    z = Fraction(p) ** shift
    assert eval_f(spec, g.scale(z)) == pytest.approx(eval_f(spec, g), abs=1e-9)


@pytest.mark.parametrize("p", PRIMES)
def test_eval_f_twisted_examples(p):
    spec = LocalTestSpec(p, 1, variant="twisted")
    assert eval_f_twisted(spec, Matrix2Local.from_rationals(p, 1, 0, 0, 1)) == 0
    g = Matrix2Local.from_rationals(p, 0, Fraction(-1, p * p), p, 0)
    assert eval_f_twisted(spec, g) == pytest.approx((p + 1) * psi_tilde_sum(p, 0, 0))
    # upper-right valuation -1 is outside the support
    assert eval_f_twisted(spec, Matrix2Local.from_rationals(p, 0, Fraction(1, p), p, 0)) == 0


def test_local_kloosterman():
    assert local_kloosterman(3, 4, 5, 0) == 1
    direct = sum(cmath.exp(2j * math.pi * (x + pow(x, -1, 3)) / 3) for x in (1, 2))
    assert local_kloosterman(1, 1, 3, 1) == pytest.approx(direct)
    for p, t in ((2, 3), (3, 2), (5, 1), (7, 2)):
        for th1, th2 in ((1, 1), (2, 5), (3, 7)):
            assert local_kloosterman(th1, th2, p, t).real == pytest.approx(arith.kloosterman(th1, th2, p**t), abs=1e-9)


def test_orbital_first_local():
    assert orbital_first_local(LocalTestSpec(2, 1)) == 6
    assert orbital_first_local(LocalTestSpec(5, 3)) == 30
    assert orbital_first_local(LocalTestSpec(7, 2, variant="twisted")) == 0


def test_orbital_closed_examples():
    spec = LocalTestSpec(3, 1)
    assert orbital_second_local_closed(spec, PAdicApprox.from_parts(3, -1, 1)) == 0
    tw = LocalTestSpec(3, 1, variant="twisted")
    # p^3 a = -1 mod 3 <=> unit = 2 mod 3
    assert orbital_second_local_closed(tw, PAdicApprox.from_parts(3, -3, 2)) == pytest.approx(36)
    assert orbital_second_local_closed(tw, PAdicApprox.from_parts(3, -3, 1)) == 0
    a = PAdicApprox.from_parts(3, -4, 1)
    expected = arith.psi_p(Fraction(-1, 3), 3) * 12 * local_kloosterman(1, 1, 3, 2)
    assert orbital_second_local_closed(spec, a) == pytest.approx(expected)


def _grid(p):
    units = [u for u in range(1, 12) if u % p][:3]
    for m in range(1, p):
        for v in (-4, -6, -8):
            for u in units:
                yield m, v, u


@pytest.mark.parametrize("p", PRIMES)
def test_central_closed_form_matches_bruteforce(p):
    for m, v, u in _grid(p):
        spec = LocalTestSpec(p, m)
        a = PAdicApprox.from_parts(p, v, u)
        assert abs(orbital_second_local_central(spec, a) - orbital_second_local_bruteforce(spec, a)) <= 1e-9


@pytest.mark.parametrize("p", PRIMES)
def test_printed_closed_form_matches_p_power_normalization(p):
    """The printed v = -4 formula is what one gets when the character-sum argument is not unit-normalized."""
    for m, v, u in _grid(p):
        spec = LocalTestSpec(p, m)
        a = PAdicApprox.from_parts(p, v, u)
        brute = orbital_second_local_bruteforce(spec, a, normalization="p_power")
        assert abs(orbital_second_local_closed(spec, a) - brute) <= 1e-9


@pytest.mark.parametrize("p", PRIMES)
def test_twisted_closed_form_matches_bruteforce(p):
    for m in range(1, p):
        spec = LocalTestSpec(p, m, variant="twisted")
        for u in range(1, p * p):
            if u % p:
                a = PAdicApprox.from_parts(p, -3, u)
                assert abs(orbital_second_local_closed(spec, a) - orbital_second_local_bruteforce(spec, a)) <= 1e-9


@pytest.mark.parametrize("p", (2, 3, 5))
def test_odd_valuations_vanish(p):
    spec = LocalTestSpec(p, 1)
    for v in (-3, -5, -7):
        a = PAdicApprox.from_parts(p, v, 1)
        assert abs(orbital_second_local_bruteforce(spec, a)) < 1e-9
        assert orbital_second_local_closed(spec, a) == 0


def test_sum_over_units_agrees_with_printed_form():
    """Summed over the cuspidal parameter the printed and central v = -4 values coincide."""
    for p in (3, 5, 7):
        for u in (1, 2, p + 1):
            a = PAdicApprox.from_parts(p, -4, u)
            printed = sum(orbital_second_local_closed(LocalTestSpec(p, m), a) for m in range(1, p))
            central = sum(orbital_second_local_central(LocalTestSpec(p, m), a) for m in range(1, p))
            assert printed == pytest.approx(central, abs=1e-9)


def test_bruteforce_needs_precision():
    a = PAdicApprox(3, -4, 1, 1)
    with pytest.raises(InsufficientPrecision):
        orbital_second_local_closed(LocalTestSpec(3, 1), a)


@pytest.mark.parametrize("p", (2, 3, 5))
def test_unramified_closed_vs_bruteforce(p):
    rng = random.Random(p)
    for r1 in range(3):
        for r2 in range(3):
            for v in range(r1 + r2 - 4, r1 + r2 + 2):
                u = rng.choice([x for x in range(1, p**3) if x % p])
                a = PAdicApprox.from_parts(p, v, u)
                closed = orbital_second_unramified(r1, r2, p, a)
                assert abs(closed - orbital_second_unramified_bruteforce(r1, r2, p, a)) <= 1e-9
                if (r1 + r2 - v) % 2:
                    assert closed == 0
                if v == r1 + r2:
                    assert closed == pytest.approx(p ** (-(r1 + r2)))


@given(st.integers(1, 30), st.integers(1, 30), st.sampled_from([1, 2, 3, 5, 6, 7]), st.integers(1, 60))
def test_local_factorization_of_global_kloosterman(n1, n2, N, c):
    C = N * N * c
    if C > 500 or math.gcd(n1 * n2, N) != 1:
        return
    prod = 1.0 + 0j
    for p, e in arith.factorize(C).items():
        q = p**e
        r_inv = pow(C // q, -1, q)
        prod *= local_kloosterman(n1 * r_inv * r_inv, n2, p, e)
    assert prod.real == pytest.approx(arith.kloosterman_direct(n1, n2, C), abs=1e-9)

"""Acceptance criteria 1 to 9, each at its stated tolerance.

Every test records a one-line verdict in ``conftest.CRITERIA`` (echoed in the
terminal summary) and prints it, then asserts the criterion as stated.
"""

import math
import random
import time

import numpy as np
import pytest
from conftest import CRITERIA

from cubictrace import arith
from cubictrace.geometric import PeterssonQuery, petersson_geometric, petersson_twisted_geometric
from cubictrace.localpadic import (
    LocalTestSpec,
    PAdicApprox,
    local_kloosterman,
    orbital_second_local_bruteforce,
    orbital_second_local_central,
    orbital_second_local_closed,
)
from cubictrace.moments import (
    mellin_barnes_closed,
    mellin_barnes_contour,
    mollifier_build,
    nonvanishing_proportion,
    quadratic_forms,
    quadratic_forms_bruteforce,
    y_from_x,
)
from cubictrace.rankin import k_product_integral, residue_bookkeeping, rs_arch_holomorphic, rs_arch_maass
from cubictrace.spectral import compare, packaged_fixture, spectral_petersson, spectral_petersson_twisted
from cubictrace.special import QuadratureBudget, gaussian_h, kuznetsov_transform
from cubictrace.weyl import compute_nd, density, fejer_h, localized_h, nd_bound, tanh_moment, weyl_main

SEED = 20240601
SQUAREFREE_30 = [N for N in range(1, 31) if arith.is_squarefree(N)]


def record(n, passed, detail):
    line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)


# ----------------------------------------------------------------- 1

def _criterion1_grid():
    for p in (2, 3, 5, 7):
        units = [u for u in range(1, 12) if u % p][:3]
        for m in range(1, p):
            for v in (-4, -6, -8):
                for u in units:
                    yield LocalTestSpec(p, m), PAdicApprox.from_parts(p, v, u)
            for u in range(1, p * p):
                if u % p:
                    yield LocalTestSpec(p, m, variant="twisted"), PAdicApprox.from_parts(p, -3, u)


def test_criterion_1_orbital_oracle():
    t0 = time.perf_counter()
    rows = []
    for spec, a in _criterion1_grid():
        brute = orbital_second_local_bruteforce(spec, a)
        printed = orbital_second_local_closed(spec, a)
        central = orbital_second_local_central(spec, a)
        p_power = orbital_second_local_bruteforce(spec, a, normalization="p_power")
        rows.append((spec, a, abs(printed - brute), abs(central - brute), abs(printed - p_power)))
    elapsed = time.perf_counter() - t0
    bad = [(s.p, s.m_p, a.valuation) for s, a, d, _, _ in rows if d > 1e-9]
    worst = max(r[2] for r in rows)
    worst_central = max(r[3] for r in rows)
    worst_p_power = max(r[4] for r in rows)
    bad_cells = sorted({(p, v) for p, _, v in bad})
    passed = not bad and elapsed < 60
    record(
        1, passed,
        f"{len(rows)} points in {elapsed:.1f}s; printed closed form vs brute force: {len(bad)} mismatches "
        f"(max {worst:.3g}) in (p, v) cells {bad_cells}. Analysis: the printed v=-4 value "
        f"psi(-m/p) p(p+1) S(1, p^4 a; p^2) equals the brute force only when the test function is "
        f"normalised by a power of p (max diff {worst_p_power:.2g}); the centrally invariant integral is "
        f"p(p+1) S(1, p^4 a - p m; p^2) (max diff {worst_central:.2g}). Both agree after summing over m.",
    )
    assert elapsed < 60
    assert not bad, f"{len(bad)} grid points exceed 1e-9"


# ----------------------------------------------------------------- 2

CRITERION2_QUERIES = [
    (2, 2, 1, 1, False), (3, 2, 1, 1, False), (3, 2, 1, 2, False), (5, 2, 2, 3, False),
    (6, 3, 1, 1, False), (7, 2, 3, 3, False), (10, 2, 1, 3, False), (15, 3, 2, 2, False),
    (30, 2, 1, 1, False), (11, 4, 1, 1, False),
    (2, 2, 1, 1, True), (3, 2, 1, 1, True), (3, 3, 2, 1, True), (5, 2, 2, 3, True),
    (6, 2, 1, 1, True), (7, 3, 3, 3, True), (10, 2, 1, 3, True), (13, 2, 1, 2, True),
    (14, 3, 1, 1, True), (21, 2, 2, 5, True),
]


def test_criterion_2_a_factor_partition():
    worst_a = 0.0
    for N in SQUAREFREE_30:
        for c in range(1, 201):
            s = sum(arith.a_factor_m(N, M, c) for M in arith.coprime_residues(N))
            worst_a = max(worst_a, abs(s - arith.a_factor(N, c)))
    worst_q = 0.0
    C = 60
    for N, k, n1, n2, tw in CRITERION2_QUERIES:
        q = PeterssonQuery(k, N, n1, n2, tw)
        geo = petersson_twisted_geometric if tw else petersson_geometric
        full = geo(q, truncation_c=C)
        parts = [geo(q.with_M(M), truncation_c=C) for M in arith.coprime_residues(N)]
        worst_q = max(worst_q, abs(sum(p.diagonal_term for p in parts) - full.diagonal_term))
        for c in range(1, C + 1):
            worst_q = max(worst_q, abs(sum(p.term(c) for p in parts) - full.term(c)))
    passed = worst_a <= 1e-10 and worst_q <= 1e-10
    record(2, passed, f"A-partition max diff {worst_a:.2g} over N<=30, c<=200; "
                      f"{len(CRITERION2_QUERIES)}-query termwise M-sum max diff {worst_q:.2g} (c<={C})")
    assert passed


# ----------------------------------------------------------------- 3

def test_criterion_3_kloosterman_crt():
    rng = random.Random(SEED)
    cases = []
    while len(cases) < 100:
        N = rng.choice([n for n in range(1, 23) if arith.is_squarefree(n)])
        cmax = 500 // (N * N)
        if cmax < 1:
            continue
        cases.append((rng.randint(1, 200), rng.randint(1, 200), N, rng.randint(1, cmax)))
    worst = 0.0
    for n1, n2, N, c in cases:
        C = N * N * c
        prod = 1.0 + 0j
        for p, e in arith.factorize(C).items():
            q = p**e
            r_inv = pow(C // q, -1, q)
            prod *= local_kloosterman(n1 * r_inv * r_inv, n2, p, e)
        worst = max(worst, abs(prod - arith.kloosterman_direct(n1, n2, C)))
    record(3, worst <= 1e-9, f"100 seeded cases with N^2 c <= 500, max |local product - direct| = {worst:.2g}")
    assert worst <= 1e-9


# ----------------------------------------------------------------- 4

def test_criterion_4_appendix_closed_forms():
    kpts = [(2.0, 0.3, 0.1), (1.5, 0.7j, -0.7j), (2.5, 1.2j, 0.4j)]
    k_rel = [k_product_integral(*pt).rel_diff for pt in kpts]
    hpts = [(1.0, 2), (1.5, 3), (2 + 1j, 2), (1.0, 6)]
    h_rel = [rs_arch_holomorphic(s, k).rel_diff for s, k in hpts]
    mpts = [(1.2, 0.8), (2.0, 0.0), (1.5, 2.5)]
    m_rel = [rs_arch_maass(s, t).rel_diff for s, t in mpts]
    books = [residue_bookkeeping(N).holds for N in SQUAREFREE_30]
    passed = max(k_rel) <= 1e-8 and max(h_rel) <= 1e-8 and max(m_rel) <= 1e-7 and all(books)
    record(4, passed, f"product integral max rel {max(k_rel):.2g}; holomorphic {max(h_rel):.2g}; "
                      f"Maass {max(m_rel):.2g}; exact residue bookkeeping holds for {sum(books)}/{len(books)} levels")
    assert passed


# ----------------------------------------------------------------- 5

def test_criterion_5_petersson_on_level_8():
    rows = []
    for weight in (4, 6):
        fs = packaged_fixture(weight)
        k = weight // 2
        for n1, n2 in ((1, 1), (3, 3), (3, 5)):
            for tw in (False, True):
                q = PeterssonQuery(k, 2, n1, n2, tw)
                if tw:
                    geo = petersson_twisted_geometric(q, tol=1e-6)
                    spec = spectral_petersson_twisted(fs, n1, n2)
                else:
                    geo = petersson_geometric(q, tol=1e-6)
                    spec = spectral_petersson(fs, n1, n2)
                rep = compare(spec, geo, rel_tol=1e-3)
                rows.append((weight, n1, n2, tw, rep))
    worst = max(r[4].rel_discrepancy for r in rows)
    tails = max(r[4].tail_bound for r in rows)
    passed = all(r[4].passed and r[4].rel_discrepancy <= 1e-3 for r in rows)
    record(5, passed, f"{len(rows)} comparisons (weights 4, 6; twisted and plain); max rel discrepancy {worst:.2g}; "
                      f"max tail bound {tails:.2g}")
    assert passed


# ----------------------------------------------------------------- 6

def test_criterion_6_mellin_barnes():
    diffs = []
    for u, k in ((0.3, 2), (0.4, 3), (0.25, 4)):
        closed = mellin_barnes_closed("I1", u, k)
        diffs.append(abs(closed - mellin_barnes_contour("I1", u, k)))
    record(6, max(diffs) <= 1e-6, "I1 closed vs contour at (0.3,2), (0.4,3), (0.25,4): "
                                  + ", ".join(f"{d:.2g}" for d in diffs))
    assert max(diffs) <= 1e-6


# ----------------------------------------------------------------- 7

def test_criterion_7_mollifier():
    prop = nonvanishing_proportion(1.5)
    big = mollifier_build(9973, 1.0)
    back = y_from_x(big.x, big.M, big.N)
    rt = max(abs(back[n] - big.y[n]) for n in big.y)
    small = mollifier_build(197, 1.0)
    fast, slow = quadratic_forms(small, 2), quadratic_forms_bruteforce(small, 2)
    qf = max(abs(a - b) for a, b in zip(fast, slow))
    passed = prop == 0.25 and big.M <= 10**4 and rt <= 1e-10 and small.M <= 200 and qf <= 1e-9
    record(7, passed, f"proportion(3/2) = {prop!r}; round trip at M={big.M}: {rt:.2g}; "
                      f"quadratic forms at M={small.M}: {qf:.2g}")
    assert passed


# ----------------------------------------------------------------- 8

def test_criterion_8_weyl_structure():
    Ts = np.linspace(1.0, 50.0, 99)
    gaps = [abs(tanh_moment(float(T)) - T * T) for T in Ts]
    const = max(gaps)
    exact = all(
        weyl_main(N, T) == N * N * arith.totient(N) * T * T / (2 * math.pi**2)
        and density(N) == arith.totient(N) ** 2 / N**2
        for N in SQUAREFREE_30 for T in (1.0, 7.5, 50.0)
    )
    bounded = const <= 1 / 12 + 1e-9 and min(gaps) > 0.08
    record(8, bounded and exact, f"sup over T in [1,50] of |int tanh(pi t) t dt - T^2| = {const:.7f} "
                                 f"(limit 1/12 = {1 / 12:.7f}); closed forms exact: {exact}")
    assert bounded and exact


# ----------------------------------------------------------------- 9

ND_GRID = [(1.0, mu) for mu in (2.0, 5.0, 10.0, 20.0, 60.0)] + [(1.25, mu) for mu in (3.0, 6.0, 12.0, 25.0, 50.0)]


def test_criterion_9_kuznetsov_robustness():
    budget = QuadratureBudget(abs_tol=1e-12)
    hs = [gaussian_h(), localized_h(fejer_h(), 5.0, 2.0), localized_h(gaussian_h(), 3.0, 1.5)]
    diffs = []
    for h in hs:
        for x in (0.1, 1.0, 5.0):
            a = kuznetsov_transform(h, x, budget)
            b = kuznetsov_transform(h, x, budget, scheme="tanh_sinh")
            diffs.append(abs(a - b))
    ratios = []
    for L, mu in ND_GRID:
        nd = compute_nd(1, 1, 2, 1, mu, L)
        ratios.append(abs(nd.total) / nd_bound(1, 1, 2, mu, L).value)
    passed = max(diffs) <= 1e-7 and max(ratios) < 1
    record(9, passed, f"scheme agreement max {max(diffs):.2g} over {len(diffs)} (h, x) pairs; "
                      f"|ND|/bound max {max(ratios):.3g} on {len(ND_GRID)} (mu, L) points (N=2, M=1, m1=m2=1)")
    assert passed

"""Geometric sides of the Petersson and Kuznetsov formulas for level N^3.

Every sum over moduli c is truncated at an explicit point and carries a
tail bound.  For the Petersson sums the bound is rigorous: it combines
|J_nu(x)| <= (x/2)^nu / Gamma(nu+1) with the Weil bound for Kloosterman
sums and an explicit divisor bound.  For the Kuznetsov sum the Bessel
transform has no closed-form majorant, so a linear majorant |T(x)| <= K x
is calibrated against quadrature on the range of x actually discarded and
the bound is flagged as empirical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import arith
from .arith import a_factor, a_factor_m, kloosterman, prime_divisors, tilde_m, totient
from .errors import InvalidQuery
from .localpadic import (
    LocalTestSpec,
    PAdicApprox,
    orbital_first_local,
    orbital_second_local_central,
    orbital_second_local_closed,
    orbital_second_unramified,
)
from .special import QuadratureBudget, TestFunctionH, bessel_j_real, diag_transform, kuznetsov_transform

__all__ = [
    "PeterssonQuery",
    "GeometricSeries",
    "petersson_geometric",
    "petersson_twisted_geometric",
    "kuznetsov_geometric",
    "spectral_side_weights",
    "first_type_arch_constant",
    "second_type_arch_kernel",
    "assemble_petersson_from_orbitals",
    "petersson_tail_bound",
    "petersson_truncation",
]

_DIVISOR_DELTA = 0.25
_DIVISOR_DELTAS = (0.2, 0.25, 0.3, 0.35, 0.4, 0.5)
_MAX_C = 200_000


@dataclass(frozen=True)
class PeterssonQuery:
    k: int
    N: int
    n1: int
    n2: int
    twisted: bool = False
    cuspidal_M: Optional[int] = None

    def __post_init__(self) -> None:
        if self.k < 2:
            raise InvalidQuery("k must be at least 2 (weight 2k >= 4)")
        arith.require_squarefree(self.N)
        if self.n1 < 1 or self.n2 < 1:
            raise InvalidQuery("n1 and n2 must be positive")
        if math.gcd(self.n1 * self.n2, self.N) != 1:
            raise InvalidQuery(f"gcd(n1*n2, N) must be 1, got n1={self.n1}, n2={self.n2}, N={self.N}")
        if self.cuspidal_M is not None and math.gcd(self.cuspidal_M, self.N) != 1:
            raise InvalidQuery(f"M={self.cuspidal_M} is not coprime to N={self.N}")

    def with_M(self, M: Optional[int]) -> "PeterssonQuery":
        return PeterssonQuery(self.k, self.N, self.n1, self.n2, self.twisted, M)


@dataclass
class GeometricSeries:
    """A truncated c-sum plus diagonal term.

    ``c_terms`` lists (c, value) in ascending c, skipping moduli that are
    excluded by a congruence.  Values may be complex for the individual
    cuspidal-parameter variants, whose A-factor is a root of unity.
    """

    diagonal_term: float
    c_terms: list[tuple[int, complex]]
    tail_bound: float
    truncation_c: int
    metadata: dict = field(default_factory=dict)

    @property
    def c_sum(self) -> complex:
        return complex(math.fsum(np.real([v for _, v in self.c_terms])),
                       math.fsum(np.imag([v for _, v in self.c_terms])))

    @property
    def total(self) -> complex | float:
        s = self.diagonal_term + self.c_sum
        if abs(s.imag) < 1e-10 * max(1.0, abs(s.real)):
            return s.real
        return s

    def term(self, c: int) -> complex:
        for cc, v in self.c_terms:
            if cc == c:
                return v
        return 0.0


# ---------------------------------------------------------- tail bounds

def _petersson_majorant(k: int, X: float, prefactor: float, modulus_scale: float, g: int, delta: float) -> tuple[float, float]:
    """(K, gamma) such that each discarded term is at most K c^{-gamma}.

    A term is prefactor * |A| / c * J_{2k-1}(2X/c) * |S(., .; m c)| with
    m = modulus_scale; the Weil bound gives |S| <= tau(mc) sqrt(g) sqrt(mc)
    and tau(mc) <= C_delta (mc)^delta.
    """
    nu = 2 * k - 1
    Cd = arith.divisor_bound_constant(delta)
    K = prefactor * X**nu / math.gamma(nu + 1) * Cd * modulus_scale ** (0.5 + delta) * math.sqrt(g)
    gamma = nu + 0.5 - delta
    return K, gamma


def _tail_from_majorant(K: float, gamma: float, C: int) -> float:
    # sum_{c > C} c^{-gamma} <= int_C^inf c^{-gamma} dc
    return K * C ** (1.0 - gamma) / (gamma - 1.0)


def _choose_truncation(K: float, gamma: float, tol: float) -> int:
    if K == 0:
        return 1
    C = max(1, int(math.ceil((K / (tol * (gamma - 1.0))) ** (1.0 / (gamma - 1.0)))))
    while C > 1 and _tail_from_majorant(K, gamma, C - 1) < tol:
        C -= 1
    while _tail_from_majorant(K, gamma, C) >= tol:
        C += 1
    return C


def _petersson_params(q: PeterssonQuery) -> tuple[float, float, float, int]:
    """(X, prefactor, modulus scale, gcd) for the plain or twisted majorant."""
    g = math.gcd(q.n1, q.n2)
    if q.twisted:
        X = 2 * math.pi * math.sqrt(q.n1 * q.n2) / q.N**1.5
        pref = (2 * q.k - 1) * q.N**1.5 / math.pi
        return X, pref, 1.0, g
    X = 2 * math.pi * math.sqrt(q.n1 * q.n2) / q.N**2
    amax = 1.0 if q.cuspidal_M is not None else float(math.prod(p - 1 for p in prime_divisors(q.N)))
    pref = (2 * q.k - 1) / math.pi * amax
    return X, pref, float(q.N * q.N), g


def _majorants(q: PeterssonQuery):
    X, pref, scale, g = _petersson_params(q)
    return [_petersson_majorant(q.k, X, pref, scale, g, d) for d in _DIVISOR_DELTAS]


def petersson_tail_bound(q: PeterssonQuery, C: int) -> float:
    """Proven bound on the absolute sum of all c-terms with c > C."""
    return min(_tail_from_majorant(K, gamma, C) for K, gamma in _majorants(q))


def petersson_truncation(q: PeterssonQuery, tol: float) -> int:
    """Smallest C whose proven tail bound is below ``tol``."""
    if tol <= 0:
        raise InvalidQuery("tol must be positive")
    C = min(_choose_truncation(K, gamma, tol) for K, gamma in _majorants(q))
    if C > _MAX_C:
        raise InvalidQuery(f"tolerance {tol} needs truncation beyond c = {_MAX_C}")
    return C


# ---------------------------------------------------------- Petersson

def _bessel_args(q: PeterssonQuery, cs: np.ndarray) -> np.ndarray:
    root = math.sqrt(q.n1 * q.n2)
    if q.twisted:
        return 4 * math.pi * root / (q.N**1.5 * cs)
    return 4 * math.pi * root / (q.N**2 * cs)


def petersson_geometric(q: PeterssonQuery, tol: float = 1e-8, truncation_c: int | None = None) -> GeometricSeries:
    """Diagonal term plus the A-weighted Kloosterman-Bessel sum.

    With ``q.cuspidal_M`` set, the A-factor is the root-of-unity weight of
    the single cuspidal parameter M and the diagonal loses its phi(N).
    """
    if q.twisted:
        raise InvalidQuery("use petersson_twisted_geometric for the twisted formula")
    k, N, n1, n2 = q.k, q.N, q.n1, q.n2
    C = truncation_c if truncation_c is not None else petersson_truncation(q, tol)
    diag_scale = 1 if q.cuspidal_M is not None else totient(N)
    diagonal = (2 * k - 1) * N * N * diag_scale / (2 * math.pi**2) if n1 == n2 else 0.0
    cs = np.arange(1, C + 1)
    J = bessel_j_real(2 * k - 1, _bessel_args(q, cs))
    pref = (-1) ** k * (2 * k - 1) / math.pi
    terms = []
    for c, jc in zip(cs.tolist(), J.tolist()):
        A = a_factor(N, c) if q.cuspidal_M is None else a_factor_m(N, q.cuspidal_M, c)
        terms.append((c, pref * A / c * jc * kloosterman(n1, n2, N * N * c)))
    return GeometricSeries(
        diagonal_term=diagonal,
        c_terms=terms,
        tail_bound=petersson_tail_bound(q, C),
        truncation_c=C,
        metadata={"kind": "petersson", "query": q, "certified": True},
    )


def _twisted_c_allowed(q: PeterssonQuery, c: int, Mt: Optional[int]) -> bool:
    if math.gcd(c, q.N) != 1:
        return False
    if Mt is None:
        return True
    return (Mt * c * c - q.n1 * q.n2) % q.N == 0


def petersson_twisted_geometric(q: PeterssonQuery, tol: float = 1e-8, truncation_c: int | None = None) -> GeometricSeries:
    """Root-number twisted sum over c coprime to N, with the M~ congruence for a single M."""
    q = q if q.twisted else PeterssonQuery(q.k, q.N, q.n1, q.n2, True, q.cuspidal_M)
    k, N, n1, n2 = q.k, q.N, q.n1, q.n2
    C = truncation_c if truncation_c is not None else petersson_truncation(q, tol)
    Mt = tilde_m(N, q.cuspidal_M) if q.cuspidal_M is not None else None
    cs = np.arange(1, C + 1)
    J = bessel_j_real(2 * k - 1, _bessel_args(q, cs))
    pref = (2 * k - 1) * N**1.5 / math.pi
    N3 = N**3
    terms = []
    for c, jc in zip(cs.tolist(), J.tolist()):
        if not _twisted_c_allowed(q, c, Mt):
            continue
        m1 = (pow(N3, -1, c) * n1) if c > 1 else 0
        terms.append((c, complex(pref * kloosterman(m1, n2, c) / c * jc)))
    return GeometricSeries(
        diagonal_term=0.0,
        c_terms=terms,
        tail_bound=petersson_tail_bound(q, C),
        truncation_c=C,
        metadata={"kind": "petersson_twisted", "query": q, "tilde_M": Mt, "certified": True},
    )


# ---------------------------------------------------------- Kuznetsov

def _calibrate_transform_majorant(h: TestFunctionH, x_max: float, budget: QuadratureBudget) -> float:
    """Smallest K with |T(x)| <= K x on a log grid of (0, x_max], inflated by 25%."""
    xs = x_max * np.logspace(-3, 0, 13)
    ratios = [abs(kuznetsov_transform(h, float(x), budget)) / x for x in xs]
    return 1.25 * max(ratios)


def kuznetsov_geometric(
    h: TestFunctionH,
    N: int,
    n1: int,
    n2: int,
    cuspidal_M: Optional[int] = None,
    tol: float = 1e-6,
    budget: QuadratureBudget | None = None,
    max_c: int = 400,
    truncation_c: int | None = None,
) -> GeometricSeries:
    """Diagonal tanh-integral plus the A-weighted Kloosterman sum against the Bessel transform.

    The truncation point is the smallest C whose empirical tail bound is
    below ``tol``, capped at ``max_c``.  When the cap binds, the returned
    series records ``tol_met = False``; the Weil-bound tail of this sum
    decays only like C^{-1/4} for generic h.
    """
    arith.require_squarefree(N)
    if n1 < 1 or n2 < 1 or math.gcd(n1 * n2, N) != 1:
        raise InvalidQuery("need positive n1, n2 coprime to N")
    if cuspidal_M is not None and math.gcd(cuspidal_M, N) != 1:
        raise InvalidQuery(f"M={cuspidal_M} is not coprime to N={N}")
    budget = budget or QuadratureBudget()
    diag_scale = 1 if cuspidal_M is not None else totient(N)
    if h.is_zero:
        C = truncation_c or 1
        return GeometricSeries(0.0, [(c, 0.0j) for c in range(1, C + 1)], 0.0, C,
                               {"kind": "kuznetsov", "certified": True, "tol_met": True})
    diagonal = N * N * diag_scale * diag_transform(h, budget) if n1 == n2 else 0.0
    root = math.sqrt(n1 * n2)
    x_of = lambda c: 4 * math.pi * root / (N * N * c)  # noqa: E731
    amax = 1.0 if cuspidal_M is not None else float(math.prod(p - 1 for p in prime_divisors(N)))
    g = math.gcd(n1, n2)
    delta = _DIVISOR_DELTA
    Cd = arith.divisor_bound_constant(delta)

    def tail(C: int, K: float) -> float:
        # |term_c| <= amax/c * Cd (N^2 c)^{1/2+delta} sqrt(g) * K * x_of(1)/c
        coeff = amax * Cd * (N * N) ** (0.5 + delta) * math.sqrt(g) * K * x_of(1)
        gamma = 1.5 - delta
        return coeff * C ** (1.0 - gamma) / (gamma - 1.0)

    if truncation_c is None:
        K0 = _calibrate_transform_majorant(h, x_of(1), budget)
        C = 1
        while C < max_c and tail(C, K0) >= tol:
            C *= 2
        C = min(C, max_c)
    else:
        C = truncation_c
    K = _calibrate_transform_majorant(h, x_of(C + 1), budget)
    terms = []
    for c in range(1, C + 1):
        A = a_factor(N, c) if cuspidal_M is None else a_factor_m(N, cuspidal_M, c)
        S = kloosterman(n1, n2, N * N * c)
        T = kuznetsov_transform(h, x_of(c), budget) if S != 0.0 else 0.0
        terms.append((c, complex(A * S * T / c)))
    tb = tail(C, K)
    return GeometricSeries(
        diagonal_term=diagonal,
        c_terms=terms,
        tail_bound=tb,
        truncation_c=C,
        metadata={
            "kind": "kuznetsov",
            "certified": False,
            "tol_met": bool(tb < tol),
            "transform_majorant": {"form": "K*x", "K": float(K), "x_max": x_of(C + 1)},
        },
    )


# ------------------------------------------------- orbital re-derivation

def spectral_side_weights(k: int | None = None, r: float = 1.0, t: float | None = None) -> float:
    """Archimedean constant linking the relative trace to the weighted eigenvalue sum.

    Holomorphic weight 2k (r = 1): 2^{4k-1} pi^{2k+1} / (Gamma(2k) e^{4 pi}).
    Maass with spectral parameter t: 2 r K_{it}(2 pi r) conj(K_{it}(2 pi r)) cosh(pi t);
    the factor S(f0)(it) of the test function is left to the caller.
    """
    if t is None:
        if k is None or k < 2:
            raise InvalidQuery("holomorphic weights need k >= 2")
        return 2.0 ** (4 * k - 1) * math.pi ** (2 * k + 1) / (math.gamma(2 * k) * math.exp(4 * math.pi))
    from .special import bessel_k_imag

    kv = float(bessel_k_imag(t, 2 * math.pi * r))
    return 2 * r * kv * kv * math.cosh(math.pi * t)


def first_type_arch_constant(k: int) -> float:
    """(4 pi)^{2k-1} e^{-4 pi} / (2k-2)!"""
    return (4 * math.pi) ** (2 * k - 1) * math.exp(-4 * math.pi) / math.factorial(2 * k - 2)


def second_type_arch_kernel(k: int, a: float) -> complex:
    """e^{-4 pi} (4 pi i)^{2k} / (2 (2k-2)!) sqrt(a) J_{2k-1}(4 pi sqrt(a)) for a > 0, else 0."""
    if a <= 0:
        return 0.0j
    ra = math.sqrt(a)
    return (
        math.exp(-4 * math.pi) * (4j * math.pi) ** (2 * k) / (2 * math.factorial(2 * k - 2))
        * ra * float(bessel_j_real(2 * k - 1, 4 * math.pi * ra))
    )


def _local_specs(N: int, M: int, variant: str) -> list[LocalTestSpec]:
    return [LocalTestSpec(p, M % p, 1, variant) for p in prime_divisors(N)]


def _second_type_finite(q: PeterssonQuery, specs: list[LocalTestSpec], c: int, a: Fraction, local_form: str) -> complex:
    """Product over all primes of the local second-type integrals at a.

    Only primes dividing n1 n2 c N can contribute a factor other than 1.
    """
    ramified = {s.p: s for s in specs}
    out = 1.0 + 0.0j
    for p in prime_divisors(q.n1 * q.n2 * c * q.N):
        ap = PAdicApprox.from_rational(a, p, precision=40)
        if p in ramified:
            spec = ramified[p]
            if local_form == "central":
                val = orbital_second_local_central(spec, ap)
            else:
                val = orbital_second_local_closed(spec, ap)
        else:
            r1 = _vp(q.n1, p)
            r2 = _vp(q.n2, p)
            val = orbital_second_unramified(r1, r2, p, ap)
        out *= val
        if out == 0:
            return 0.0j
    return out


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def assemble_petersson_from_orbitals(
    q: PeterssonQuery,
    tol: float = 1e-8,
    truncation_c: int | None = None,
    local_form: str = "closed",
) -> GeometricSeries:
    """Rebuild the geometric side from local orbital integrals.

    For each c the second-type term is the product of the local integrals
    at every prime (ramified closed forms at p | N, spherical Kloosterman
    forms elsewhere) times the Archimedean kernel at a = n1 n2 / (N^4 c^2)
    (or n1 n2 / (N^3 c^2) twisted).  The first-type term uses the ramified
    first-type integrals and |n1|_p at the other primes.  Everything is then
    divided by the holomorphic spectral constant.

    Without ``q.cuspidal_M`` the result is summed over all M coprime to N.
    ``local_form`` chooses the ramified second-type evaluator ("closed" as
    printed or "central").

    The twisted spectral constant multiplies the finite-adelic sign of each
    form; the output is converted to the classical root number by the factor
    i^{2k} so that it is directly comparable with
    ``petersson_twisted_geometric``.
    """
    if local_form not in ("closed", "central"):
        raise ValueError("local_form must be 'closed' or 'central'")
    k, N, n1, n2 = q.k, q.N, q.n1, q.n2
    Ms = [q.cuspidal_M] if q.cuspidal_M is not None else arith.coprime_residues(N)
    C = truncation_c if truncation_c is not None else petersson_truncation(q, tol)
    variant = "twisted" if q.twisted else "plain"
    norm = math.prod(1 + 1 / p for p in prime_divisors(N)) / math.sqrt(n1 * n2) * spectral_side_weights(k)
    sign = (-1) ** k if q.twisted else 1

    first = 0.0
    if not q.twisted and n1 == n2:
        for M in Ms:
            loc = math.prod(orbital_first_local(s) for s in _local_specs(N, M, variant))
            first += loc / n1 * first_type_arch_constant(k)
    diagonal = first / norm

    terms = []
    power = 3 if q.twisted else 4
    for c in range(1, C + 1):
        if q.twisted and math.gcd(c, N) != 1:
            continue
        a = Fraction(n1 * n2, N**power * c * c)
        arch = second_type_arch_kernel(k, float(a))
        fin = 0.0j
        for M in Ms:
            fin += _second_type_finite(q, _local_specs(N, M, variant), c, a, local_form)
        terms.append((c, sign * fin * arch / norm))
    return GeometricSeries(
        diagonal_term=diagonal,
        c_terms=terms,
        tail_bound=petersson_tail_bound(q, C),
        truncation_c=C,
        metadata={"kind": "orbital_assembly", "local_form": local_form, "query": q, "certified": True},
    )

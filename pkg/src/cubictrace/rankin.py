"""Local Rankin-Selberg integrals, Eisenstein residue constants and the newform inner-product constant.

Every closed form here is paired with an independent evaluation (a series
or a quadrature). The functions return an :class:`RSComparison` that carries
both numbers, so callers can see the agreement directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import special as sps

from . import arith
from .errors import DomainError, InvalidQuery, SeriesNotConverged
from .special import bessel_k_imag, gamma_complex, gauss_legendre_panels

__all__ = [
    "SatakePair",
    "RSComparison",
    "HolomorphicKind",
    "MaassKind",
    "whittaker_diag",
    "hecke_power_sums",
    "rs_local_unramified",
    "rs_local_ramified",
    "arch_section",
    "rs_arch_holomorphic",
    "rs_arch_maass",
    "k_product_integral",
    "inner_product_constant",
    "inner_product",
    "phi_hat_constant",
    "ramified_residue_factor",
    "ResidueBookkeeping",
    "residue_bookkeeping",
]

SATAKE_EXPONENT = 7 / 64


@dataclass(frozen=True)
class SatakePair:
    """Satake parameters at an unramified prime; alpha1 * alpha2 = 1."""

    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        if abs(self.alpha1 * self.alpha2 - 1) > 1e-10:
            raise InvalidQuery("Satake parameters must satisfy alpha1 * alpha2 = 1")

    @classmethod
    def from_angle(cls, theta: float) -> "SatakePair":
        return cls(cmath.exp(1j * theta), cmath.exp(-1j * theta))

    @classmethod
    def from_lambda(cls, lam: float) -> "SatakePair":
        """Roots of X^2 - lam X + 1 for a unitary Hecke eigenvalue lam = lambda(p)."""
        disc = cmath.sqrt(lam * lam - 4)
        return cls((lam + disc) / 2, (lam - disc) / 2)

    def lam(self) -> complex:
        return self.alpha1 + self.alpha2

    def is_sane(self, p: int, slack: float = 1e-9) -> bool:
        bound = p**SATAKE_EXPONENT + slack
        return abs(self.alpha1) <= bound and abs(self.alpha2) <= bound

    def swapped(self) -> "SatakePair":
        return SatakePair(self.alpha2, self.alpha1)


@dataclass(frozen=True)
class RSComparison:
    """A closed form next to an independent evaluation of the same quantity."""

    closed: complex
    independent: complex
    method: str

    @property
    def abs_diff(self) -> float:
        return abs(complex(self.closed) - complex(self.independent))

    @property
    def rel_diff(self) -> float:
        scale = abs(complex(self.closed))
        return self.abs_diff / scale if scale else self.abs_diff

    @property
    def value(self) -> complex:
        return self.closed


def _realify(z: complex, scale: float = 1.0) -> Union[float, complex]:
    z = complex(z)
    return z.real if abs(z.imag) <= 1e-13 * max(abs(z.real), scale) else z


def hecke_power_sums(satake: SatakePair, n_max: int) -> list[complex]:
    """[sum_{l1+l2=n} alpha1^l1 alpha2^l2 for n = 0..n_max] by the two-term recurrence."""
    lam = satake.lam()
    out = [1.0 + 0j]
    if n_max >= 1:
        out.append(lam)
    for _ in range(2, n_max + 1):
        out.append(lam * out[-1] - out[-2])
    return out[: n_max + 1]


def whittaker_diag(p: int, satake: SatakePair, n: int) -> Union[float, complex]:
    """W_p(diag(p^n, 1)) = p^{-n/2} lambda(p^n); zero for n < 0."""
    if n < 0:
        return 0.0
    return _realify(p ** (-n / 2) * hecke_power_sums(satake, n)[n])


# ------------------------------------------------------------ local p-adic

def rs_local_unramified(s: complex, p: int, satake: SatakePair, tol: float = 1e-17, max_terms: int = 5000) -> RSComparison:
    """L_p(2s,1) sum_m p^{-ms} |lambda(p^m)|^2 against L_p(s,1) L_p(s, sym^2)."""
    s = complex(s)
    if s.real <= 1:
        raise DomainError("the direct series is used only for Re(s) > 1")
    X = p ** (-s)
    lam = satake.lam()
    # |lambda(p^m)|^2 with conjugated Satake parameters in the second factor
    a, b = 1.0 + 0j, lam
    ca, cb = 1.0 + 0j, lam.conjugate()
    total = 1.0 + 0j
    Xm = 1.0 + 0j
    for m in range(1, max_terms + 1):
        Xm *= X
        term = Xm * b * cb
        total += term
        if abs(term) <= tol * abs(total) and m > 4:
            break
        a, b = b, lam * b - a
        ca, cb = cb, lam.conjugate() * cb - ca
    else:
        raise SeriesNotConverged(f"local Rankin-Selberg series did not settle in {max_terms} terms")
    series = total / (1 - X * X)
    a1, a2 = satake.alpha1, satake.alpha2
    closed = 1 / ((1 - X) * (1 - X) * (1 - a1 * a1 * X) * (1 - a2 * a2 * X))
    if abs(abs(a1) - 1) > 1e-12 and abs(a1.imag) > 1e-12:
        # off the unitary axis and not real: |lambda|^2 is not lambda^2, closed form uses conjugates
        b1, b2 = a1.conjugate(), a2.conjugate()
        closed = (1 - a1 * a2 * b1 * b2 * X * X) / (
            (1 - a1 * b1 * X) * (1 - a1 * b2 * X) * (1 - a2 * b1 * X) * (1 - a2 * b2 * X)
        ) / (1 - X * X)
    return RSComparison(closed=closed, independent=series, method="Euler product vs series")


def rs_local_ramified(s: complex, p: int) -> RSComparison:
    """vol(Z_p^x K_p(3)) = 1/(p^2 (p+1)) against (1-p^{-s}) L_p(s,1) L_p(s,sym^2)/(p^2(p+1)) with L_p(s,sym^2) = 1."""
    if arith.factorize(p) != {p: 1}:
        raise InvalidQuery(f"{p} is not prime")
    exact = Fraction(1, p * p * (p + 1))
    X = p ** (-complex(s))
    alt = (1 - X) / (p * p * (p + 1)) * (1 / (1 - X)) * 1.0
    return RSComparison(closed=exact, independent=alt, method="volume vs L-factor form")


# ----------------------------------------------------------- archimedean

def _log_quadrature(f, u_min: float, u_max: float, width: float = 0.25, order: int = 20) -> complex:
    val, _ = gauss_legendre_panels(lambda u: f(np.exp(u), u), u_min, u_max, width, order)
    return complex(val)


def arch_section(s: complex) -> RSComparison:
    """xi_infty(s) = 2 int_0^inf z^{2s} e^{-pi z^2} dz/z = pi^{-s} Gamma(s)."""
    s = complex(s)
    if s.real <= 0:
        raise DomainError("Re(s) must be positive")
    closed = math.pi ** (-s) * gamma_complex(s)
    u_min = math.log(1e-17) / (2 * s.real)
    quad = 2 * _log_quadrature(lambda z, u: np.exp(2 * s * u - math.pi * z * z), u_min, 3.5)
    return RSComparison(closed=closed, independent=quad, method="closed vs quadrature")


def rs_arch_holomorphic(s: complex, k: int) -> RSComparison:
    """4^{2-2k-s} pi^{-(2s+2k-1)} Gamma(s) Gamma(s+2k-1), with weight 2k."""
    s = complex(s)
    if s.real <= 0:
        raise DomainError("Re(s) must be positive")
    if k < 1:
        raise InvalidQuery("k must be positive")
    closed = 4 ** (2 - 2 * k - s) * math.pi ** (-(2 * s + 2 * k - 1)) * gamma_complex(s) * gamma_complex(s + 2 * k - 1)
    e = 2 * k + s - 1
    u_min = math.log(1e-17) / e.real
    u_max = math.log(max(60.0, 4 * e.real) / (4 * math.pi)) + 2.0
    inner = _log_quadrature(lambda a, u: 4 * np.exp(e * u - 4 * math.pi * a), u_min, u_max)
    return RSComparison(closed=closed, independent=math.pi ** (-s) * gamma_complex(s) * inner,
                        method="closed vs quadrature")


def _k_values(order: complex, y: np.ndarray) -> np.ndarray:
    order = complex(order)
    if abs(order.real) < 1e-15:
        out = np.empty(y.shape)
        for i in range(0, y.size, 256):
            out[i:i + 256] = bessel_k_imag(order.imag, y[i:i + 256], rel_tol=1e-12)
        return out
    if abs(order.imag) < 1e-15:
        return sps.kv(order.real, y)
    raise DomainError("K-Bessel order must be real or purely imaginary")


def k_product_integral(s: complex, mu: complex, nu: complex) -> RSComparison:
    """int_0^inf K_mu(y) K_nu(y) y^s dy/y against 2^{s-3} prod Gamma((s +- mu +- nu)/2) / Gamma(s)."""
    s, mu, nu = complex(s), complex(mu), complex(nu)
    if s.real <= abs(mu.real) + abs(nu.real):
        raise DomainError("Re(s) must exceed |Re mu| + |Re nu|")
    g = gamma_complex
    closed = 2 ** (s - 3) * g((s - mu - nu) / 2) * g((s - mu + nu) / 2) * g((s + mu - nu) / 2) * g((s + mu + nu) / 2) / g(s)
    lead = s.real - abs(mu.real) - abs(nu.real)
    u_min = max(math.log(1e-16) / lead, -120.0)

    def f(y, u):
        return _k_values(mu, y) * _k_values(nu, y) * np.exp(s * u)

    quad = _log_quadrature(f, u_min, math.log(45.0), width=0.5)
    return RSComparison(closed=closed, independent=quad, method="closed vs double quadrature")


def rs_arch_maass(s: complex, t: float) -> RSComparison:
    """pi^{-2s} Gamma(s/2 - it) Gamma(s/2 + it) Gamma(s/2)^2.

    The independent value is 2^{3-s} pi^{-2s} Gamma(s) int K_{it} conj(K_{it}) a^s da/a,
    with the K-integral done by quadrature over the integral representation of K_{it}.
    """
    s = complex(s)
    if s.real <= 0:
        raise DomainError("Re(s) must be positive")
    g = gamma_complex
    closed = math.pi ** (-2 * s) * g(s / 2 - 1j * t) * g(s / 2 + 1j * t) * g(s / 2) ** 2
    kint = k_product_integral(s, 1j * t, -1j * t).independent
    indep = 2 ** (3 - s) * math.pi ** (-2 * s) * g(s) * kint
    return RSComparison(closed=closed, independent=indep, method="closed vs double quadrature")


# -------------------------------------------------------- global constants

@dataclass(frozen=True)
class HolomorphicKind:
    k: int


@dataclass(frozen=True)
class MaassKind:
    t: float


def inner_product_constant(kind: Union[HolomorphicKind, MaassKind], N: int = 1) -> float:
    """The archimedean constant c in <phi, phi> = 2 L_fin(1, sym^2) prod_{p|N} p/(p+1) * c."""
    arith.require_squarefree(N)
    if isinstance(kind, HolomorphicKind):
        k = kind.k
        if k < 1:
            raise InvalidQuery("k must be positive")
        return 4.0 ** (1 - 2 * k) * math.pi ** (-(2 * k + 1)) * math.gamma(2 * k)
    if isinstance(kind, MaassKind):
        return 1.0 / math.cosh(math.pi * kind.t)
    raise InvalidQuery(f"unknown kind {kind!r}")


def inner_product(kind: Union[HolomorphicKind, MaassKind], N: int, l_sym2: float) -> float:
    fac = math.prod(Fraction(p, p + 1) for p in arith.prime_divisors(N)) if N > 1 else Fraction(1)
    return 2 * l_sym2 * float(fac) * inner_product_constant(kind, N)


def phi_hat_constant(N: int) -> Fraction:
    """hat Phi((0,0)) = prod_{p|N} (p-1)/p^4."""
    arith.require_squarefree(N)
    out = Fraction(1)
    for p in arith.prime_divisors(N):
        out *= Fraction(p - 1, p**4)
    return out


def ramified_residue_factor(N: int) -> Fraction:
    """prod_{p|N} (1-p^{-1})/(p^2(p+1)), the value at s = 1 of the ramified local factors."""
    arith.require_squarefree(N)
    out = Fraction(1)
    for p in arith.prime_divisors(N):
        out *= (1 - Fraction(1, p)) / (p * p * (p + 1))
    return out


@dataclass(frozen=True)
class ResidueBookkeeping:
    N: int
    phi_hat: Fraction
    residue_from_local: Fraction
    level_factor: Fraction
    residue_from_inner_product: Fraction

    @property
    def holds(self) -> bool:
        closed = Fraction(1)
        for p in arith.prime_divisors(self.N):
            closed *= Fraction(p - 1, p**3 * (p + 1))
        return self.residue_from_local == closed == self.residue_from_inner_product


def residue_bookkeeping(N: int) -> ResidueBookkeeping:
    """The N-dependent parts of the residue at s = 1, computed two ways in exact arithmetic.

    One route multiplies the ramified local integrals at s = 1. The other is
    (1/2) hat Phi((0,0)) times the level factor 2 prod p/(p+1) of the inner product.
    """
    phi_hat = phi_hat_constant(N)
    level = Fraction(1)
    for p in arith.prime_divisors(N):
        level *= Fraction(p, p + 1)
    return ResidueBookkeeping(
        N=N,
        phi_hat=phi_hat,
        residue_from_local=ramified_residue_factor(N),
        level_factor=level,
        residue_from_inner_product=phi_hat / 2 * (2 * level),
    )

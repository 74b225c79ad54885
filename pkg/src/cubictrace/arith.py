"""Integer arithmetic and character-sum primitives.

Everything here is exact integer arithmetic except the exponential sums,
which are accumulated in double precision.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidQuery, NotSquarefree

__all__ = [
    "ResidueClass",
    "factorize",
    "prime_divisors",
    "divisors",
    "is_squarefree",
    "require_squarefree",
    "mobius",
    "totient",
    "tau",
    "omega",
    "additive_character",
    "p_principal_part",
    "psi_p",
    "kloosterman",
    "kloosterman_direct",
    "weil_bound",
    "divisor_bound_constant",
    "a_factor",
    "a_factor_m",
    "tilde_m",
    "coprime_residues",
]


@dataclass(frozen=True)
class ResidueClass:
    modulus: int
    value: int

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        if not 0 <= self.value < self.modulus:
            raise ValueError("value must lie in [0, modulus)")

    @classmethod
    def of(cls, value: int, modulus: int) -> "ResidueClass":
        return cls(modulus, value % modulus)

    def inverse(self) -> "ResidueClass":
        return ResidueClass(self.modulus, pow(self.value, -1, self.modulus) if self.modulus > 1 else 0)


@lru_cache(maxsize=65536)
def _factor_tuple(n: int) -> tuple[tuple[int, int], ...]:
    out = []
    m = n
    for p in (2, 3):
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    f = 5
    while f * f <= m:
        for p in (f, f + 2):
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                out.append((p, e))
        f += 6
    if m > 1:
        out.append((m, 1))
    return tuple(out)


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer as ``{p: exponent}``."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    return dict(_factor_tuple(n))


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in _factor_tuple(n)]


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in _factor_tuple(n):
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in _factor_tuple(n))


def require_squarefree(N: int) -> None:
    if N < 1 or not is_squarefree(N):
        raise NotSquarefree(f"level parameter N={N} must be a squarefree positive integer")


def mobius(n: int) -> int:
    fac = _factor_tuple(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def totient(n: int) -> int:
    out = 1
    for p, e in _factor_tuple(n):
        out *= (p - 1) * p ** (e - 1)
    return out


def tau(n: int) -> int:
    """Number of positive divisors."""
    out = 1
    for _, e in _factor_tuple(n):
        out *= e + 1
    return out


def omega(n: int) -> int:
    """Number of prime factors counted with multiplicity (big Omega)."""
    return sum(e for _, e in _factor_tuple(n))


def coprime_residues(N: int) -> list[int]:
    return [M for M in range(1, N + 1) if math.gcd(M, N) == 1]


# ---------------------------------------------------------------- characters

def additive_character(x: Fraction | int) -> complex:
    """e(x) = exp(2 pi i x), evaluated on the reduced fractional part."""
    x = Fraction(x)
    frac = x - math.floor(x)
    if frac == 0:
        return 1.0 + 0.0j
    if frac == Fraction(1, 2):
        return -1.0 + 0.0j
    return cmath.exp(2j * math.pi * frac.numerator / frac.denominator)


def p_principal_part(x: Fraction | int, p: int) -> Fraction:
    """r_p(x) in Z[1/p] ∩ [0, 1) with x - r_p(x) in Z_p."""
    x = Fraction(x)
    den = x.denominator
    e = 0
    while den % p == 0:
        den //= p
        e += 1
    if e == 0:
        return Fraction(0)
    pe = p**e
    # x = num / (p^e den); p-part is (num * den^{-1} mod p^e) / p^e
    r = (x.numerator * pow(den, -1, pe)) % pe
    return Fraction(r, pe)


def psi_p(x: Fraction | int, p: int) -> complex:
    """Local additive character psi_p(x) = exp(-2 pi i r_p(x))."""
    return additive_character(-p_principal_part(x, p))


# --------------------------------------------------------- Kloosterman sums

def _powmod_array(x: np.ndarray, e: int, m: int) -> np.ndarray:
    """Elementwise x^e mod m for int64 arrays; needs m < 3e9 to avoid overflow."""
    result = np.ones_like(x)
    base = x % m
    while e:
        if e & 1:
            result = (result * base) % m
        base = (base * base) % m
        e >>= 1
    return result


@lru_cache(maxsize=4096)
def _units_and_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    xs = np.arange(1, c, dtype=np.int64)
    for p, _ in _factor_tuple(c):
        xs = xs[xs % p != 0]
    if c < 3_000_000_000:
        inv = _powmod_array(xs, totient(c) - 1, c)
    else:
        inv = np.array([pow(int(x), -1, c) for x in xs], dtype=np.int64)
    return xs, inv


def kloosterman_direct(m: int, n: int, c: int) -> float:
    """S(m, n; c) by enumerating every invertible residue mod c."""
    if c < 1:
        raise ValueError("modulus must be positive")
    xs, inv = _units_and_inverses(c)
    phase = ((m % c) * xs + (n % c) * inv) % c
    return float(np.cos(2.0 * np.pi * phase / c).sum())


def kloosterman(m: int, n: int, c: int) -> float:
    """Classical Kloosterman sum S(m, n; c).

    Uses the twisted multiplicativity
    S(m, n; qr) = S(m r̄², n; q) S(m q̄², n; r) for coprime q, r,
    reducing to one direct enumeration per prime power.
    """
    if c < 1:
        raise ValueError("modulus must be positive")
    fac = _factor_tuple(c)
    if len(fac) <= 1:
        return kloosterman_direct(m, n, c)
    out = 1.0
    for p, e in fac:
        q = p**e
        r = c // q
        rinv = pow(r % q, -1, q)
        out *= kloosterman_direct(m * rinv * rinv, n, q)
        if out == 0.0:
            return 0.0
    return out


def weil_bound(m: int, n: int, c: int) -> float:
    """tau(c) * sqrt(gcd(m, n, c)) * sqrt(c), a proven bound for |S(m, n; c)|."""
    return tau(c) * math.sqrt(math.gcd(math.gcd(m, n), c)) * math.sqrt(c)


@lru_cache(maxsize=64)
def divisor_bound_constant(delta: float) -> float:
    """Smallest C with tau(n) <= C n^delta for every n >= 1.

    The supremum factors over primes; a prime p contributes
    max_a (a+1) p^{-a delta}, which equals 1 once p^delta >= 2.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    C = 1.0
    p = 2
    while p ** delta < 2.0:
        if all(p % q for q in range(2, int(p**0.5) + 1)):
            best, a = 1.0, 1
            while True:
                val = (a + 1) * p ** (-a * delta)
                if val < best and a > 1 / (delta * math.log(p)):
                    break
                best = max(best, val)
                a += 1
            C *= best
        p += 1
    return C


# ------------------------------------------------------------------ A-factors

def a_factor(N: int, c: int) -> int:
    """A_N(c) = prod_{p | N} (-1 if p does not divide c, p - 1 if it does)."""
    require_squarefree(N)
    out = 1
    for p in prime_divisors(N):
        out *= (p - 1) if c % p == 0 else -1
    return out


def a_factor_m(N: int, M: int, c: int) -> complex:
    """A_{N,M}(c) = prod_{p | N} (e(M/p) if p does not divide c, else 1)."""
    require_squarefree(N)
    if math.gcd(M, N) != 1:
        raise InvalidQuery(f"cuspidal parameter M={M} must be coprime to N={N}")
    out = 1.0 + 0.0j
    for p in prime_divisors(N):
        if c % p:
            out *= additive_character(Fraction(M % p, p))
    return out


def tilde_m(N: int, M: int) -> int:
    """Unique 1 <= M~ <= N with M~ = -M (N/p)^3 mod p for every p | N."""
    require_squarefree(N)
    if math.gcd(M, N) != 1:
        raise InvalidQuery(f"cuspidal parameter M={M} must be coprime to N={N}")
    if N == 1:
        return 1
    x, mod = 0, 1
    for p in prime_divisors(N):
        target = (-M * pow(N // p, 3, p)) % p
        # lift x mod `mod` to a solution mod `mod * p`
        t = ((target - x) * pow(mod, -1, p)) % p
        x += mod * t
        mod *= p
    return x if x != 0 else N

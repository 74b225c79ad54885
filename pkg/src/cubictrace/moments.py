"""Main terms of the first and second moments and the mollifier pipeline.

Only main terms are returned; no error term is ever folded in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from . import arith
from .errors import DomainError, InvalidQuery
from .special import digamma, gamma_complex, gauss_legendre_panels, hyp2f1, loggamma_complex

__all__ = [
    "MomentConstants",
    "MollifierSpec",
    "g_k",
    "m1_main",
    "m2_main",
    "moment_constants",
    "d2",
    "nd2_zero",
    "nd2_pole_coefficient",
    "mellin_barnes_closed",
    "mellin_barnes_contour",
    "mollifier_build",
    "y_from_x",
    "quadratic_forms",
    "quadratic_forms_bruteforce",
    "mollified_second_moment_direct",
    "mollified_first_moment",
    "nonvanishing_proportion",
    "mollified_main_terms",
]

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class MomentConstants:
    c_minus1: float
    c_01: float
    c_02: float
    g_kN: float


def _check_mN(m: int, N: int) -> None:
    arith.require_squarefree(N)
    if m < 1:
        raise InvalidQuery("m must be a positive integer")
    if math.gcd(m, N) != 1:
        raise InvalidQuery(f"m={m} must be coprime to N={N}")


def g_k(k: int, N: int) -> float:
    """sum_{p|N} log p/(p-1) + psi(k) + gamma_0 - log 2 pi."""
    if k < 2:
        raise InvalidQuery("k must be at least 2")
    arith.require_squarefree(N)
    return math.fsum(math.log(p) / (p - 1) for p in arith.prime_divisors(N)) + digamma(k) + EULER_GAMMA - math.log(2 * math.pi)


def m1_main(m: int, k: int, N: int) -> float:
    _check_mN(m, N)
    return (2 * k - 1) * N * N * arith.totient(N) / (2 * math.pi**2 * math.sqrt(m))


def _m2_prefactor(m: int, k: int, N: int) -> float:
    phi = arith.totient(N)
    return (2 * k - 1) * N * phi * phi / (2 * math.pi**2 * math.sqrt(m))


def m2_main(m: int, k: int, N: int) -> float:
    _check_mN(m, N)
    if not arith.is_squarefree(m):
        raise InvalidQuery("m must be squarefree")
    return _m2_prefactor(m, k, N) * arith.tau(m) * (math.log(N**3 / m) + 2 * g_k(k, N))


def moment_constants(m: int, k: int, N: int) -> MomentConstants:
    _check_mN(m, N)
    P = _m2_prefactor(m, k, N) * arith.tau(m)
    primes = arith.prime_divisors(N)
    s1 = math.fsum(math.log(p) / (p - 1) for p in primes)
    s2 = math.fsum(p * math.log(p) / (p - 1) for p in primes)
    c01 = P * (EULER_GAMMA - 0.5 * math.log(m) + s1)
    c02 = P * (EULER_GAMMA - math.log(4 * math.pi**2 / N**2) - 0.5 * math.log(m) + s2 + 2 * digamma(k))
    return MomentConstants(c_minus1=P / 2, c_01=c01, c_02=c02, g_kN=g_k(k, N))


# ------------------------------------------- u-dependent diagonal pieces

def d2(m: int, u: float, k: int, N: int) -> float:
    """Diagonal part of the second moment at real u != 0.

    (2k-1) N^2 phi(N) / (2 pi^2) m^{-1/2-u} tau(m) zeta^{(N)}(1+2u), where
    zeta^{(N)} drops the Euler factors at p | N.
    """
    _check_mN(m, N)
    if u == 0:
        raise DomainError("u = 0 is a pole")
    zN = float(zeta(1 + 2 * u)) * math.prod(1 - p ** (-1 - 2 * u) for p in arith.prime_divisors(N))
    return (2 * k - 1) * N * N * arith.totient(N) / (2 * math.pi**2) * m ** (-0.5 - u) * arith.tau(m) * zN


def _mu_tau_twisted(d: int, u: float) -> float:
    return math.fsum(arith.mobius(d // r) * r ** (2 * u) * arith.tau(r) for r in arith.divisors(d))


def nd2_zero(m: int, u: float, k: int, N: int) -> float:
    """The part of the off-diagonal second moment carrying the u = 0 pole, at real u != 0."""
    _check_mN(m, N)
    if u == 0:
        raise DomainError("u = 0 is a pole")
    pref = (-1) ** k * (2 * k - 1) * N * N / (2 * math.pi**2 * math.sqrt(m)) * (4 * math.pi**2 / (m * N**4)) ** u
    ell = math.fsum(arith.mobius(l) / l for l in arith.divisors(N))
    dsum = math.fsum(_mu_tau_twisted(d, u) for d in arith.divisors(m))
    a_series = float(zeta(2 * u)) * math.prod(p ** (1 - 2 * u) - 1 for p in arith.prime_divisors(N))
    return pref * ell * dsum * a_series * mellin_barnes_closed("I1", u, k).real


def nd2_pole_coefficient(m: int, k: int, N: int) -> float:
    """Residue of nd2_zero at u = 0 in closed form.

    Gamma(2u) ~ 1/(2u) and zeta(0) = -1/2 reduce the residue to
    -(2k-1) N phi(N)^2 tau(m) / (4 pi^2 sqrt m).
    """
    _check_mN(m, N)
    ell = arith.totient(N) / N
    dsum = arith.tau(m)  # sum_{d|m} (mu * tau)(d) = sum_{d|m} 1
    # I1 ~ 2 cos(pi k) / (2u) = (-1)^k / u;  zeta(0) prod (p - 1) = -phi(N)/2
    return (-1) ** k * (2 * k - 1) * N * N / (2 * math.pi**2 * math.sqrt(m)) * ell * dsum * (-0.5 * arith.totient(N)) * (-1) ** k


# ------------------------------------------------- Mellin-Barnes integrals

def mellin_barnes_closed(which: str, u: complex, k: int, z: float | None = None) -> complex:
    """Closed forms of the three Mellin-Barnes integrals.

    I1(u, k)    = 2 cos(pi(k-u)) Gamma(2u) Gamma(k-u)^2 / Gamma(k+u)^2
    I2(u, k, z) = 2 cos(pi(k-u)) z^{1/2-k} Gamma(k-u)^2/Gamma(2k) 2F1(k-u, k-u; 2k; 1/z)
    I3(u, k, z) = 2 z^{1/2-k} Gamma(k-u)^2/Gamma(2k) 2F1(k-u, k-u; 2k; -1/z)
    """
    u = complex(u)
    if k < 1:
        raise DomainError("k must be positive")
    if u.real >= k - 1:
        raise DomainError(f"Re(u) must be below k - 1 = {k - 1} for an admissible contour")
    if which == "I1":
        g = gamma_complex(2 * u) * (gamma_complex(k - u) / gamma_complex(k + u)) ** 2
        return complex(2 * np.cos(np.pi * (k - u)) * g)
    if which not in ("I2", "I3"):
        raise ValueError("which must be 'I1', 'I2' or 'I3'")
    if z is None or z <= 1:
        raise DomainError("I2 and I3 need z > 1")
    base = 2 * z ** (0.5 - k) * gamma_complex(k - u) ** 2 / math.gamma(2 * k)
    if which == "I2":
        return complex(np.cos(np.pi * (k - u)) * base * hyp2f1(k - u, k - u, 2 * k, 1 / z))
    return complex(base * hyp2f1(k - u, k - u, 2 * k, -1 / z))


def _mb_integrand(which: str, u: float, k: int, z: float | None, alpha: float):
    def f(tau: np.ndarray) -> np.ndarray:
        s = alpha + 1j * tau
        lg = (loggamma_complex((2 * k - 1 + s) / 2) - loggamma_complex((2 * k + 1 - s) / 2)
              + 2 * loggamma_complex((1 - s) / 2 - u))
        if which in ("I1", "I2"):
            # sin(pi w) = (i/2) e^{-i pi w} (1 - e^{2 i pi w}), stable for Im w >= 0
            w = s / 2 + u
            lg = lg + np.log(0.5j) - 1j * np.pi * w + np.log1p(-np.exp(2j * np.pi * w))
        if which in ("I2", "I3"):
            lg = lg + s / 2 * math.log(z)
        return np.real(np.exp(lg))
    return f


def mellin_barnes_contour(
    which: str,
    u: float,
    k: int,
    z: float | None = None,
    alpha: float | None = None,
    T0: float = 40.0,
    levels: int = 9,
) -> float:
    """Vertical-line quadrature oracle for the Mellin-Barnes integrals at real u.

    The line is Re(s) = alpha with 1-2k < alpha < -1-2u (midpoint by default).
    I3 decays exponentially and is integrated directly.  I1 decays only like
    |tau|^{-1-2u} without oscillation, so partial integrals F(T) over
    [-T, T] are computed for T = T0 2^i and extrapolated under the ansatz
    F(T) = I + sum_j c_j T^{-(2u+j)}.  I2 is excluded: its integrand
    oscillates like z^{i tau/2} on top of the slow decay.
    """
    if which == "I2":
        raise DomainError("no contour oracle for I2")
    lo, hi = 1 - 2 * k, -1 - 2 * u
    if lo >= hi:
        raise DomainError("empty contour strip")
    if alpha is None:
        alpha = 0.5 * (lo + hi)
    if not lo < alpha < hi:
        raise DomainError(f"alpha must lie in ({lo}, {hi})")
    f = _mb_integrand(which, u, k, z, alpha)
    # (1/2 pi i) int f(s) ds = (1/2 pi) int f(alpha + i tau) d tau = (1/pi) int_0^inf Re f
    if which == "I3":
        val, _ = gauss_legendre_panels(f, 0.0, 80.0, 0.5, order=20)
        return float(val) / math.pi
    Ts = [T0 * 2**i for i in range(levels)]
    partial = []
    acc, prev = 0.0, 0.0
    for T in Ts:
        v, _ = gauss_legendre_panels(f, prev, T, 1.0, order=20)
        acc += float(v)
        prev = T
        partial.append(acc / math.pi)
    # solve F(T_i) = I + sum_{j < levels-1} c_j T_i^{-(2u+j)} exactly
    A = np.ones((levels, levels))
    for i, T in enumerate(Ts):
        for j in range(levels - 1):
            A[i, j + 1] = T ** (-(2 * u + j))
    sol = np.linalg.solve(A, np.array(partial))
    return float(sol[0])


# --------------------------------------------------------------- mollifier

@dataclass
class MollifierSpec:
    N: int
    M_length: float
    delta: float
    x: dict[int, float]
    y: dict[int, float]
    metadata: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return int(math.floor(self.M_length + 1e-9))


@lru_cache(maxsize=None)
def _mu_mu(n: int) -> int:
    """Dirichlet convolution mu * mu; multiplicative with values -2, 1, 0 on p, p^2, p^{>=3}."""
    out = 1
    for _, e in arith.factorize(n).items():
        out *= {1: -2, 2: 1}.get(e, 0)
    return out


def _coprime_range(M: int, N: int) -> list[int]:
    return [n for n in range(1, M + 1) if math.gcd(n, N) == 1]


def _x_from_y(y: dict[int, float], M: int, N: int) -> dict[int, float]:
    x = {}
    for n in _coprime_range(M, N):
        x[n] = math.fsum(_mu_mu(m) / m * y.get(m * n, 0.0) for m in _coprime_range(M // n, N))
    return x


def y_from_x(x: dict[int, float], M: int, N: int, log_weight: bool = False) -> dict[int, float]:
    """y_n = sum_{m <= M/n, (m,N)=1} tau(m)/m x_{nm}, or with the extra weight log m."""
    y = {}
    for n in _coprime_range(M, N):
        terms = []
        for m in _coprime_range(M // n, N):
            w = arith.tau(m) / m
            if log_weight:
                w *= math.log(m)
            terms.append(w * x.get(n * m, 0.0))
        y[n] = math.fsum(terms)
    return y


def mollifier_build(N: int, delta: float) -> MollifierSpec:
    """Mollifier of length M = N^delta with y_n = mu(n) n/phi(n) on n <= M coprime to N."""
    arith.require_squarefree(N)
    if not 0 < delta <= 1.5:
        raise InvalidQuery("delta must lie in (0, 3/2]")
    M_length = float(N) ** delta
    M = int(math.floor(M_length + 1e-9))
    y = {}
    for n in _coprime_range(M, N):
        mu = arith.mobius(n)
        y[n] = mu * n / arith.totient(n) if mu else 0.0
    x = _x_from_y(y, M, N)
    logN = math.log(N) if N > 1 else 1.0
    ratio = max((abs(v) / (arith.tau(n) * logN) ** 2 for n, v in x.items()), default=0.0)
    return MollifierSpec(N=N, M_length=M_length, delta=delta, x=x, y=y,
                         metadata={"max_x_over_tau_logN_sq": ratio})


def _frak_s(n: int, with_log: bool = False) -> float:
    terms = []
    for l in arith.divisors(n):
        mu = arith.mobius(l)
        if mu:
            terms.append(mu / l * (math.log(l) if with_log else 1.0))
    return math.fsum(terms) / n


def quadratic_forms(spec: MollifierSpec, k: int) -> tuple[float, float, float]:
    """(Pi, Pi_{0,1}, Pi_{1,0}) through the diagonalising variables y and y^1."""
    M, N = spec.M, spec.N
    y = y_from_x(spec.x, M, N)
    y1 = y_from_x(spec.x, M, N, log_weight=True)
    lead = 3 * math.log(N) + 2 * g_k(k, N)
    ns = _coprime_range(M, N)
    pi = lead * math.fsum(_frak_s(n) * y[n] ** 2 for n in ns)
    pi01 = math.fsum(_frak_s(n) * y[n] * y1[n] for n in ns)
    pi10 = math.fsum(_frak_s(n, True) * y[n] ** 2 for n in ns)
    return pi, pi01, pi10


def quadratic_forms_bruteforce(spec: MollifierSpec, k: int) -> tuple[float, float, float]:
    """The same three forms as literal triple sums over (n, m1, m2)."""
    M, N = spec.M, spec.N
    x = spec.x
    lead = 3 * math.log(N) + 2 * g_k(k, N)
    t0, t01, t10 = [], [], []
    for n in _coprime_range(M, N):
        S, S1 = _frak_s(n), _frak_s(n, True)
        ms = _coprime_range(M // n, N)
        for m1 in ms:
            for m2 in ms:
                w = arith.tau(m1) * arith.tau(m2) / (m1 * m2) * x.get(m1 * n, 0.0) * x.get(m2 * n, 0.0)
                if w == 0.0:
                    continue
                t0.append(S * w)
                t01.append(S * w * math.log(m1))
                t10.append(S1 * w)
    return lead * math.fsum(t0), math.fsum(t01), math.fsum(t10)


def mollified_second_moment_direct(spec: MollifierSpec, k: int) -> float:
    """(phi(N)/N) sum_d sum_{m1, m2 <= M/d} x_{d m1} x_{d m2} tau(m1 m2) S(m1 m2) / (d m1 m2)."""
    M, N = spec.M, spec.N
    x = spec.x
    gk2 = 2 * g_k(k, N)
    terms = []
    for d in _coprime_range(M, N):
        ms = _coprime_range(M // d, N)
        for m1 in ms:
            for m2 in ms:
                w = x.get(d * m1, 0.0) * x.get(d * m2, 0.0)
                if w == 0.0:
                    continue
                S = math.log(N**3 / (m1 * m2)) + gk2
                terms.append(w * arith.tau(m1 * m2) * S / (d * m1 * m2))
    return arith.totient(N) / N * math.fsum(terms)


def mollified_first_moment(spec: MollifierSpec) -> float:
    """sum_{m <= M, (m,N)=1} x_m / m."""
    return math.fsum(v / n for n, v in spec.x.items())


def nonvanishing_proportion(delta: float) -> float:
    if delta <= 0:
        raise InvalidQuery("delta must be positive")
    return delta / (3 + 2 * delta)


def mollified_main_terms(N: int, delta: float, k: int) -> tuple[float, float]:
    """(Delta (phi/N) log N, (3 Delta + 2 Delta^2) (phi/N)^2 (log N)^2); k does not enter the main terms."""
    arith.require_squarefree(N)
    if k < 2:
        raise InvalidQuery("k must be at least 2")
    r = arith.totient(N) / N
    L = math.log(N)
    return delta * r * L, (3 * delta + 2 * delta**2) * r * r * L * L

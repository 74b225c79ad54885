"""Localized test functions, the truncated-Kuznetsov main term and the Weyl-law constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import arith
from .errors import InvalidQuery
from .geometric import GeometricSeries, kuznetsov_geometric
from .special import QuadratureBudget, TestFunctionH, diag_transform, gauss_legendre_panels

__all__ = [
    "BandLimitedH",
    "LocalizedH",
    "fejer_h",
    "localized_h",
    "d_mu_l",
    "tanh_moment",
    "truncated_main",
    "weyl_main",
    "weyl_main_per_M",
    "density",
    "NDBound",
    "nd_bound",
    "compute_nd",
    "ND_EPSILON",
]

ND_EPSILON = 0.01


def _irwin_hall_centered(y, n: int):
    """Density of the sum of n independent uniforms on [-1/2, 1/2]."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for j in range(n + 1):
        out += (-1) ** j * math.comb(n, j) * np.clip(y + n / 2 - j, 0, None) ** (n - 1)
    # the alternating sum cancels only to rounding outside the support
    out[np.abs(y) >= n / 2] = 0.0
    return out / math.factorial(n - 1)


@dataclass(frozen=True)
class BandLimitedH(TestFunctionH):
    """An even test function whose Fourier transform is supported in [-hat_support, hat_support].

    The Fourier transform convention is hat h(xi) = int h(x) e^{-i x xi} dx.
    """

    hat_support: float = 1.0
    hat_at_zero: float = 1.0
    order: int = 4

    def hat(self, xi):
        n = 2 * self.order
        a = self.hat_support / n
        C = a / (math.pi * float(_irwin_hall_centered(0.0, n)))
        return C * math.pi / a * _irwin_hall_centered(np.asarray(xi) / (2 * a), n)


def fejer_h(order: int = 4, beta: float = 0.99) -> BandLimitedH:
    """h(x) = C (sin(a x)/(a x))^{2 order} with a = beta/(2 order).

    hat h is a cardinal B-spline supported on [-beta, beta] with hat h(0) = 1.
    h is nonnegative on the real and imaginary axes and decays like
    |x|^{-2 order} on the real line.
    """
    if order < 1:
        raise InvalidQuery("order must be at least 1")
    if not 0 < beta < 1:
        raise InvalidQuery("beta must lie in (0, 1) so that supp(hat h) is inside (-1, 1)")
    n = 2 * order
    a = beta / n
    C = a / (math.pi * float(_irwin_hall_centered(0.0, n)))

    def ev(z):
        z = np.asarray(z)
        w = a * z
        small = np.abs(w) < 1e-8
        safe = np.where(small, 1.0, w)
        s = np.where(small, 1.0 - w * w / 6.0, np.sin(safe) / safe)
        return C * s**n

    return BandLimitedH(
        evaluator=ev,
        strip_half_width=50.0,
        decay_exponent=float(n),
        scale=1.0,
        name=f"fejer(order={order}, beta={beta:g})",
        hat_support=beta,
        hat_at_zero=1.0,
        order=order,
    )


@dataclass(frozen=True)
class LocalizedH(TestFunctionH):
    """h_{mu,L}(z) = h(L(mu+z)) + h(L(mu-z))."""

    base: Optional[TestFunctionH] = None
    mu: float = 0.0
    L: float = 1.0


def localized_h(h: TestFunctionH, mu: float, L: float) -> LocalizedH:
    if L < 1:
        raise InvalidQuery("L must be at least 1")
    if mu < 0:
        raise InvalidQuery("mu must be nonnegative")

    def ev(z):
        z = np.asarray(z)
        return h(L * (mu + z)) + h(L * (mu - z))

    return LocalizedH(
        evaluator=ev,
        strip_half_width=h.strip_half_width / L,
        decay_exponent=h.decay_exponent,
        scale=h.scale / L,
        name=f"localized({h.name}, mu={mu:g}, L={L:g})",
        is_zero=h.is_zero,
        base=h,
        mu=float(mu),
        L=float(L),
    )


def d_mu_l(N: int, localized: LocalizedH, budget: QuadratureBudget | None = None) -> tuple[float, float]:
    """(D(mu, L), (mu/L + 1/L^2) N^2).

    D(mu, L) = (N^2 / 2 pi^2) int h_{mu,L}(t) tanh(pi t) t dt by quadrature;
    the second entry is the order-of-magnitude majorant without constant.
    """
    arith.require_squarefree(N)
    mu, L = localized.mu, localized.L
    majorant = (mu / L + 1 / L**2) * N * N
    if localized.is_zero:
        return 0.0, majorant
    budget = budget or QuadratureBudget()
    # the bulk of h_{mu,L} sits near |t| = mu; extend the cutoff past it
    T = None
    if budget.t_max is None:
        T = mu + max(50.0 / L, (1e3 / L))
    return N * N * diag_transform(localized, budget, T=T), majorant


def tanh_moment(T: float, panel: float = 0.25) -> float:
    """int_{-T}^{T} tanh(pi t) t dt by Gauss-Legendre panels."""
    if T < 0:
        raise InvalidQuery("T must be nonnegative")
    if T == 0:
        return 0.0
    val, _ = gauss_legendre_panels(lambda t: np.tanh(np.pi * t) * t, 0.0, T, panel, order=20)
    return 2.0 * float(val)


def truncated_main(N: int, T: float, budget: QuadratureBudget | None = None) -> float:
    """(N^2 / 2 pi^2) int_{-T}^{T} tanh(pi t) t dt for a single cuspidal parameter."""
    arith.require_squarefree(N)
    if T < 0:
        raise InvalidQuery("T must be nonnegative")
    return N * N / (2 * math.pi**2) * tanh_moment(T)


def weyl_main(N: int, T: float) -> float:
    """N^2 phi(N) T^2 / (2 pi^2)."""
    arith.require_squarefree(N)
    return N * N * arith.totient(N) * T * T / (2 * math.pi**2)


def weyl_main_per_M(N: int, T: float) -> float:
    arith.require_squarefree(N)
    return N * N * T * T / (2 * math.pi**2)


def density(N: int) -> float:
    """phi(N)^2 / N^2."""
    arith.require_squarefree(N)
    return arith.totient(N) ** 2 / N**2


@dataclass(frozen=True)
class NDBound:
    value: float
    threshold_mu: float
    negligible: bool
    epsilon: float


def nd_bound(m1: int, m2: int, N: int, mu: float, L: float, epsilon: float = ND_EPSILON) -> NDBound:
    """(m1 m2)^{1/4+eps} e^{pi L/2 + eps L} / (mu^eps L) and the vanishing threshold.

    ``negligible`` is True when mu >= (pi sqrt(m1 m2) / N^2) e^{pi L + 1}.
    """
    if min(m1, m2, N) < 1 or mu <= 0 or L <= 0:
        raise InvalidQuery("all inputs must be positive")
    val = (m1 * m2) ** (0.25 + epsilon) / (mu**epsilon * L) * math.exp(math.pi * L / 2 + epsilon * L)
    thr = math.pi * math.sqrt(m1 * m2) / N**2 * math.exp(math.pi * L + 1)
    return NDBound(value=val, threshold_mu=thr, negligible=mu >= thr, epsilon=epsilon)


def compute_nd(
    m1: int,
    m2: int,
    N: int,
    M: int,
    mu: float,
    L: float,
    h: TestFunctionH | None = None,
    truncation_c: int | None = None,
    budget: QuadratureBudget | None = None,
) -> GeometricSeries:
    """The non-diagonal Kuznetsov sum for h_{mu,L} and cuspidal parameter M.

    By default the c-sum runs to four times the point where the leading
    asymptotic of the transform switches off, and at least to c = 24.
    """
    h = h or fejer_h()
    loc = localized_h(h, mu, L)
    if truncation_c is None:
        cstar = math.pi * math.sqrt(m1 * m2) / (N * N * mu) * math.exp(math.pi * L + 1)
        truncation_c = max(24, int(math.ceil(4 * cstar)))
    series = kuznetsov_geometric(loc, N, m1, m2, cuspidal_M=M, budget=budget or QuadratureBudget(abs_tol=1e-9),
                                 truncation_c=truncation_c)
    return GeometricSeries(0.0, series.c_terms, series.tail_bound, series.truncation_c,
                           dict(series.metadata, mu=mu, L=L))

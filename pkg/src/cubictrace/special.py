"""Special functions and the two spectral transforms of the Kuznetsov formula.

Complex Gamma, digamma and real-order Bessel J come from ``scipy.special``.
Imaginary-order J, imaginary-order K, the Gauss series and every quadrature
rule are implemented here because scipy does not cover complex orders or
complex hypergeometric parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special as sps

from .errors import BudgetExceeded, DomainError, PoleAtNonpositiveInteger, SeriesDiverges

__all__ = [
    "TestFunctionH",
    "QuadratureBudget",
    "gaussian_h",
    "zero_h",
    "gamma_complex",
    "loggamma_complex",
    "digamma",
    "bessel_j_real",
    "bessel_j_imag",
    "bessel_j_imag_over_cosh",
    "bessel_k_imag",
    "hyp2f1",
    "gauss_legendre_panels",
    "tanh_sinh",
    "kuznetsov_transform",
    "diag_transform",
]


# ------------------------------------------------------------- data types

@dataclass(frozen=True)
class TestFunctionH:
    """An even test function h on the spectral line.

    ``evaluator`` must accept numpy arrays of complex or real arguments.
    ``scale`` is the width of the narrowest feature of h on the real line and
    sets the quadrature panel size.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    strip_half_width: float
    decay_exponent: float
    even: bool = True
    scale: float = 1.0
    name: str = "h"
    is_zero: bool = False

    def __post_init__(self) -> None:
        if not self.even:
            raise DomainError("test functions must be even")
        if self.strip_half_width <= 0 or self.decay_exponent <= 0 or self.scale <= 0:
            raise DomainError("strip width, decay exponent and scale must be positive")

    def __call__(self, z):
        return self.evaluator(np.asarray(z))

    def validate(self, samples: int = 64, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        t = rng.uniform(-10, 10, samples) + 1j * rng.uniform(-0.4, 0.4, samples) * min(self.strip_half_width, 1.0)
        lhs, rhs = self(t), self(-t)
        if np.max(np.abs(lhs - rhs)) > 1e-12 * max(1.0, float(np.max(np.abs(lhs)))):
            raise DomainError(f"{self.name} is not even on sampled points")


@dataclass(frozen=True)
class QuadratureBudget:
    abs_tol: float = 1e-10
    max_nodes: int = 400_000
    t_max: float | None = None

    def __post_init__(self) -> None:
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be positive")


def gaussian_h(width: float = 1.0) -> TestFunctionH:
    """h(t) = exp(-(t/width)^2)."""
    w = float(width)
    return TestFunctionH(
        evaluator=lambda z: np.exp(-((np.asarray(z) / w) ** 2)),
        strip_half_width=50.0,
        decay_exponent=100.0,
        scale=w,
        name=f"gaussian(width={w:g})",
    )


def zero_h() -> TestFunctionH:
    return TestFunctionH(
        evaluator=lambda z: np.zeros_like(np.asarray(z), dtype=complex),
        strip_half_width=50.0,
        decay_exponent=100.0,
        name="zero",
        is_zero=True,
    )


# ---------------------------------------------------------------- Gamma

def _check_pole(z) -> None:
    z = np.asarray(z)
    bad = (np.imag(z) == 0) & (np.real(z) <= 0) & (np.real(z) == np.round(np.real(z)))
    if np.any(bad):
        raise PoleAtNonpositiveInteger("Gamma has a pole at nonpositive integers")


def gamma_complex(z):
    """Gamma(z) for complex z (scalar or array)."""
    _check_pole(z)
    out = sps.gamma(np.asarray(z, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def loggamma_complex(z):
    """Principal branch of log Gamma(z)."""
    _check_pole(z)
    out = sps.loggamma(np.asarray(z, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def digamma(x: float) -> float:
    return float(sps.digamma(x))


# ----------------------------------------------------------------- Bessel

def bessel_j_real(nu: float, x):
    """J_nu(x) for real order nu >= 0 and x > 0."""
    if nu < 0:
        raise DomainError("order must be nonnegative")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("argument must be positive")
    out = sps.jv(nu, xa)
    return float(out) if np.ndim(out) == 0 else out


_J_IMAG_XMAX = 30.0


def _log_cosh_pi(t: np.ndarray) -> np.ndarray:
    a = np.pi * np.abs(t)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def bessel_j_imag_over_cosh(t, x: float):
    """J_{2it}(x) / cosh(pi t), stable for large |t| (vectorised over t)."""
    if x <= 0:
        raise DomainError("argument must be positive")
    if x > _J_IMAG_XMAX:
        raise DomainError(f"imaginary-order series limited to x <= {_J_IMAG_XMAX}")
    t = np.asarray(t, dtype=float)
    nu = 2j * t
    log_term0 = nu * math.log(x / 2.0) - sps.loggamma(1.0 + nu) - _log_cosh_pi(t)
    term = np.exp(log_term0)
    total = term.copy()
    q = -(x / 2.0) ** 2
    for m in range(1, 400):
        term = term * q / (m * (m + nu))
        total = total + term
        if m > x and np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    else:  # pragma: no cover - x is capped well below the non-convergence regime
        raise BudgetExceeded("imaginary-order Bessel series did not converge")
    return complex(total) if total.ndim == 0 else total


def bessel_j_imag(t, x: float):
    """J_{2it}(x) by its ascending series."""
    t_arr = np.asarray(t, dtype=float)
    val = bessel_j_imag_over_cosh(t_arr, x) * np.cosh(np.pi * t_arr)
    return complex(val) if np.ndim(val) == 0 else val


def bessel_k_imag(t: float, y, rel_tol: float = 1e-15):
    """K_{it}(y) = int_0^inf exp(-y cosh s) cos(t s) ds (vectorised over y).

    The integrand is entire and decays double exponentially, so the
    trapezoidal rule converges geometrically; the step is halved until two
    successive sums agree.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("argument must be positive")
    s_max = math.acosh(max(760.0 / float(np.min(y)), 1.0)) + 1.0
    h = 0.25
    prev = None
    for _ in range(12):
        s = np.arange(0.0, s_max + h, h)
        w = np.full(s.shape, h)
        w[0] = h / 2
        vals = np.exp(-np.multiply.outer(y, np.cosh(s))) * np.cos(t * s)
        cur = vals @ w
        if prev is not None and np.all(np.abs(cur - prev) <= rel_tol * np.maximum(np.abs(cur), 1e-300) + 1e-300):
            break
        prev = cur
        h /= 2
    return float(cur) if cur.ndim == 0 else cur


# ----------------------------------------------------------- hypergeometric

def hyp2f1(a: complex, b: complex, c: complex, z: complex, tol: float = 1e-16, max_terms: int = 100_000) -> complex:
    """Gauss 2F1(a, b; c; z) by its power series for |z| < 1."""
    if abs(z) >= 1:
        raise SeriesDiverges("2F1 series requires |z| < 1")
    if complex(c).imag == 0 and complex(c).real <= 0 and float(complex(c).real).is_integer():
        raise PoleAtNonpositiveInteger("c must not be a nonpositive integer")
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    az = abs(z)
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1))
        term = term * ratio * z
        total += term
        if term == 0:
            return total
        # bound later ratios by their limit |z| inflated by the current excess
        rho = max(az, abs(ratio) * az)
        if rho < 1 and n > 2 and abs(term) * rho / (1 - rho) <= tol * abs(total):
            return total
    raise SeriesDiverges("2F1 series did not reach tolerance")


# ------------------------------------------------------------- quadrature

@lru_cache(maxsize=32)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_legendre_panels(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, width: float, order: int = 20):
    """Composite Gauss-Legendre rule with panels of at most ``width``."""
    if b <= a:
        return 0.0, 0
    npan = max(1, int(math.ceil((b - a) / width)))
    x, w = _gl_nodes(order)
    edges = np.linspace(a, b, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    vals = f(nodes)
    return (vals * weights).sum(), nodes.size


def tanh_sinh(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-14, max_level: int = 10):
    """Double-exponential rule on [a, b], refining the step until stable."""
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    h = 0.5
    tmax = 3.2
    prev = None
    used = 0
    for _ in range(max_level):
        k = np.arange(-int(tmax / h), int(tmax / h) + 1)
        s = k * h
        u = 0.5 * np.pi * np.sinh(s)
        x = np.tanh(u)
        w = 0.5 * np.pi * np.cosh(s) / np.cosh(u) ** 2
        keep = np.abs(x) < 1.0
        vals = f(c + r * x[keep])
        cur = r * h * (w[keep] * vals).sum()
        used += int(keep.sum())
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur, used
        prev = cur
        h /= 2
    return cur, used


def _transform_cutoff(h: TestFunctionH, x: float, budget: QuadratureBudget, weight_power: float) -> float:
    """Point beyond which the integrand envelope leaves less than abs_tol/10."""
    if budget.t_max is not None:
        return float(budget.t_max)
    t_hard = 5000.0
    step = min(h.scale, 1.0) / 4.0
    grid = np.arange(step, t_hard + step, step)
    env = np.abs(h(grid)) * grid**weight_power * np.exp(x * x / (8.0 * np.maximum(grid, 1.0)))
    tail_factor = grid / max(h.decay_exponent - weight_power - 1.0, 1.0)
    big = np.nonzero(env * tail_factor > budget.abs_tol / 10.0)[0]
    if big.size == 0:
        return max(step * 8, 1.0)
    if big[-1] == grid.size - 1:
        raise BudgetExceeded("test function does not decay enough before t = 5000")
    return float(grid[big[-1]] + 4 * step)


def _kuznetsov_integrand(h: TestFunctionH, x: float):
    def f(t: np.ndarray) -> np.ndarray:
        jc = bessel_j_imag_over_cosh(t, x)
        hp = h(t.astype(complex))
        # i * t * [h(t) J_{2it} - h(-t) J_{-2it}] / cosh, with h(-t) = h(t)
        # and J_{-2it}(x) = conj(J_{2it}(x))
        return np.real(1j * t * (hp * jc - hp * np.conj(jc)))
    return f


def kuznetsov_transform(
    h: TestFunctionH,
    x: float,
    budget: QuadratureBudget | None = None,
    scheme: str = "gauss_legendre",
) -> float:
    """i * int_R h(t) t J_{2it}(x) / cosh(pi t) dt, folded onto t >= 0.

    ``scheme`` selects composite Gauss-Legendre panels or panelwise
    tanh-sinh; the two share only the integrand.
    """
    budget = budget or QuadratureBudget()
    if h.is_zero:
        return 0.0
    if x <= 0:
        raise DomainError("x must be positive")
    T = _transform_cutoff(h, x, budget, weight_power=1.5)
    freq = 2.0 * abs(math.log(x / 2.0)) + 2.0 * math.log(2.0 * T + 2.0) + 1.0
    width = min(0.5, 2.0 / freq, h.scale / 2.0)
    f = _kuznetsov_integrand(h, x)
    if scheme == "gauss_legendre":
        npan = int(math.ceil(T / width))
        if npan * 20 > budget.max_nodes:
            raise BudgetExceeded(f"needs {npan * 20} nodes, budget {budget.max_nodes}")
        val, _ = gauss_legendre_panels(f, 0.0, T, width, order=20)
        return float(val)
    if scheme == "tanh_sinh":
        edges = np.arange(0.0, T + 4 * width, 4 * width)
        total, used = 0.0, 0
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, n = tanh_sinh(f, lo, hi, tol=budget.abs_tol * 1e-3)
            total += v
            used += n
            if used > 4 * budget.max_nodes:
                raise BudgetExceeded("tanh-sinh node budget exhausted")
        return float(total)
    raise ValueError(f"unknown scheme {scheme!r}")


def diag_transform(h: TestFunctionH, budget: QuadratureBudget | None = None, T: float | None = None) -> float:
    """(1/2 pi^2) int_R h(t) tanh(pi t) t dt, or over [-T, T] when T is given."""
    budget = budget or QuadratureBudget()
    if h.is_zero:
        return 0.0
    if T is None:
        T = _transform_cutoff(h, 0.0, budget, weight_power=1.0)
    width = min(0.5, h.scale / 2.0)
    f = lambda t: np.real(h(t.astype(complex))) * np.tanh(np.pi * t) * t  # noqa: E731
    val, n = gauss_legendre_panels(f, 0.0, T, width, order=20)
    if n > budget.max_nodes:
        raise BudgetExceeded(f"needs {n} nodes, budget {budget.max_nodes}")
    return float(val) / math.pi**2

"""Local test functions at p | N and their orbital integrals.

Two independent routes are provided for every second-type orbital integral:

* closed forms (the case tables for ``v_p(a)``), and
* brute-force finite sums over residues of ``x`` and ``y``, evaluating the
  test function pointwise on each coset of the integration lattice.

The plain test function is only invariant under the centre once its argument
is normalised so that the lower-right entry is 1.  ``eval_f`` always does
this.  The brute-force oracle also accepts ``normalization="p_power"``, which
instead scales by a power of p only; that reading is not central-invariant
and is exposed purely as a diagnostic (see ``orbital_second_local_closed``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from .arith import additive_character, factorize, psi_p
from .errors import InsufficientPrecision

__all__ = [
    "PAdicApprox",
    "LocalTestSpec",
    "Matrix2Local",
    "eval_f",
    "eval_f_twisted",
    "local_kloosterman",
    "orbital_first_local",
    "orbital_second_local_closed",
    "orbital_second_local_central",
    "orbital_second_local_bruteforce",
    "orbital_second_unramified",
    "orbital_second_unramified_bruteforce",
]

_ZERO_VAL = 10**9


# --------------------------------------------------------------- p-adic type

@dataclass(frozen=True)
class PAdicApprox:
    """x = p^valuation * (unit + O(p^precision)).

    Two degenerate forms are allowed: the exact zero (``unit == 0`` and
    ``valuation == _ZERO_VAL``) and an indeterminate ``O(p^valuation)``
    (``unit == 0``, ``precision == 0``) produced when subtraction cancels
    every known digit.
    """

    p: int
    valuation: int
    unit: int
    precision: int

    def __post_init__(self) -> None:
        if self.unit == 0:
            if self.precision != 0:
                raise ValueError("zero unit only allowed for exact or indeterminate zeros")
            return
        if self.precision < 1:
            raise ValueError("precision must be positive")
        mod = self.p**self.precision
        if not 0 < self.unit < mod or self.unit % self.p == 0:
            raise ValueError("unit must be a residue coprime to p in [1, p^precision)")

    # constructors
    @classmethod
    def zero(cls, p: int) -> "PAdicApprox":
        return cls(p, _ZERO_VAL, 0, 0)

    @classmethod
    def indeterminate(cls, p: int, valuation: int) -> "PAdicApprox":
        return cls(p, valuation, 0, 0)

    @classmethod
    def from_parts(cls, p: int, valuation: int, unit: int, precision: int | None = None) -> "PAdicApprox":
        if precision is None:
            precision = abs(valuation) + 4
        return cls(p, valuation, unit % p**precision, precision)

    @classmethod
    def from_rational(cls, x: Fraction | int, p: int, precision: int | None = None) -> "PAdicApprox":
        x = Fraction(x)
        if x == 0:
            return cls.zero(p)
        num, den, v = x.numerator, x.denominator, 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        if precision is None:
            precision = abs(v) + 4
        mod = p**precision
        return cls(p, v, (num * pow(den, -1, mod)) % mod, precision)

    # predicates
    @property
    def is_exact_zero(self) -> bool:
        return self.unit == 0 and self.valuation >= _ZERO_VAL

    @property
    def is_indeterminate(self) -> bool:
        return self.unit == 0 and self.valuation < _ZERO_VAL

    @property
    def absolute_precision(self) -> int:
        if self.unit == 0:
            return self.valuation
        return self.valuation + self.precision

    def to_fraction(self) -> Fraction:
        """The representative p^valuation * unit (digits beyond precision set to 0)."""
        if self.unit == 0:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.valuation

    # arithmetic
    def _check(self, other: "PAdicApprox") -> None:
        if self.p != other.p:
            raise ValueError("mixed primes in p-adic arithmetic")

    def __neg__(self) -> "PAdicApprox":
        if self.unit == 0:
            return self
        mod = self.p**self.precision
        return PAdicApprox(self.p, self.valuation, (-self.unit) % mod, self.precision)

    def __mul__(self, other: "PAdicApprox | int | Fraction") -> "PAdicApprox":
        if not isinstance(other, PAdicApprox):
            other = PAdicApprox.from_rational(other, self.p, max(self.precision, 1) + 8)
        self._check(other)
        if self.is_exact_zero or other.is_exact_zero:
            return PAdicApprox.zero(self.p)
        if self.is_indeterminate or other.is_indeterminate:
            lo = self.valuation + other.valuation
            return PAdicApprox.indeterminate(self.p, lo)
        prec = min(self.precision, other.precision)
        mod = self.p**prec
        return PAdicApprox(self.p, self.valuation + other.valuation, (self.unit * other.unit) % mod, prec)

    __rmul__ = __mul__

    def inverse(self) -> "PAdicApprox":
        if self.unit == 0:
            raise InsufficientPrecision("division by a p-adic number not known to be nonzero")
        mod = self.p**self.precision
        return PAdicApprox(self.p, -self.valuation, pow(self.unit, -1, mod), self.precision)

    def __truediv__(self, other: "PAdicApprox | int | Fraction") -> "PAdicApprox":
        if not isinstance(other, PAdicApprox):
            other = PAdicApprox.from_rational(other, self.p, max(self.precision, 1) + 8)
        return self * other.inverse()

    def __add__(self, other: "PAdicApprox | int | Fraction") -> "PAdicApprox":
        if not isinstance(other, PAdicApprox):
            other = PAdicApprox.from_rational(other, self.p, max(self.precision, 1) + 8)
        self._check(other)
        if self.is_exact_zero:
            return other
        if other.is_exact_zero:
            return self
        p = self.p
        absprec = min(self.absolute_precision, other.absolute_precision)
        v0 = min(self.valuation, other.valuation)
        if absprec <= v0:
            return PAdicApprox.indeterminate(p, absprec)
        mod = p ** (absprec - v0)
        s = (self.unit * p ** (self.valuation - v0) + other.unit * p ** (other.valuation - v0)) % mod
        if s == 0:
            return PAdicApprox.indeterminate(p, absprec)
        v = v0
        while s % p == 0:
            s //= p
            v += 1
        prec = absprec - v
        return PAdicApprox(p, v, s % p**prec, prec)

    __radd__ = __add__

    def __sub__(self, other: "PAdicApprox | int | Fraction") -> "PAdicApprox":
        if not isinstance(other, PAdicApprox):
            other = PAdicApprox.from_rational(other, self.p, max(self.precision, 1) + 8)
        return self + (-other)

    def residue(self, k: int) -> int:
        """The value modulo p^k of an integral element."""
        if self.is_exact_zero:
            return 0
        if self.valuation >= k:
            return 0
        if self.valuation < 0 and not self.is_indeterminate:
            raise ValueError("residue requested for a non-integral element")
        if self.absolute_precision < k:
            raise InsufficientPrecision(f"value known only modulo p^{self.absolute_precision}, need p^{k}")
        return (self.unit * self.p**self.valuation) % self.p**k

    def val_at_least(self, bound: int) -> bool:
        """Decide v(x) >= bound, raising when the digits carried cannot tell."""
        if self.is_exact_zero:
            return True
        if self.is_indeterminate:
            if self.valuation >= bound:
                return True
            raise InsufficientPrecision(f"cannot decide v(x) >= {bound} from O(p^{self.valuation})")
        return self.valuation >= bound

    def val_equals(self, target: int) -> bool:
        if self.is_exact_zero:
            return False
        if self.is_indeterminate:
            if self.valuation > target:
                return False
            raise InsufficientPrecision(f"cannot decide v(x) = {target} from O(p^{self.valuation})")
        return self.valuation == target


@dataclass(frozen=True)
class LocalTestSpec:
    p: int
    m_p: int
    zeta_p: int = 1
    variant: Literal["plain", "twisted"] = "plain"

    def __post_init__(self) -> None:
        if len(factorize(self.p)) != 1 or factorize(self.p)[self.p] != 1:
            raise ValueError(f"{self.p} is not prime")
        if not 1 <= self.m_p <= self.p - 1:
            raise ValueError("m_p must lie in [1, p-1]")
        if self.zeta_p not in (1, -1):
            raise ValueError("zeta_p must be +1 or -1")
        if self.variant not in ("plain", "twisted"):
            raise ValueError("variant must be 'plain' or 'twisted'")


@dataclass(frozen=True)
class Matrix2Local:
    """[[a, b], [c, d]] over Q_p."""

    a: PAdicApprox
    b: PAdicApprox
    c: PAdicApprox
    d: PAdicApprox

    def __post_init__(self) -> None:
        if len({self.a.p, self.b.p, self.c.p, self.d.p}) != 1:
            raise ValueError("matrix entries must share the same prime")

    @property
    def p(self) -> int:
        return self.a.p

    @classmethod
    def from_rationals(cls, p: int, a, b, c, d, precision: int | None = None) -> "Matrix2Local":
        f = lambda x: PAdicApprox.from_rational(x, p, precision)  # noqa: E731
        return cls(f(a), f(b), f(c), f(d))

    def scale(self, z: PAdicApprox | int | Fraction) -> "Matrix2Local":
        return Matrix2Local(self.a * z, self.b * z, self.c * z, self.d * z)


# ------------------------------------------------------------ character sums

@lru_cache(maxsize=64)
def _char_table(p: int) -> np.ndarray:
    """K[B, C] = sum_{l in F_p^x} psi~(B l + C l^{-1}) with psi~(x) = e(-x/p)."""
    ell = np.arange(1, p, dtype=np.int64)
    inv = np.array([pow(int(l), -1, p) for l in ell], dtype=np.int64)
    B = np.arange(p, dtype=np.int64)[:, None, None]
    C = np.arange(p, dtype=np.int64)[None, :, None]
    phase = (B * ell[None, None, :] + C * inv[None, None, :]) % p
    tab = np.exp(-2j * np.pi * phase / p).sum(axis=2)
    tab.setflags(write=False)
    return tab


def _psi_tilde_sum(p: int, B: int, C: int) -> complex:
    return complex(_char_table(p)[B % p, C % p])


def eval_f(spec: LocalTestSpec, g: Matrix2Local) -> complex:
    """Plain test function at g, after normalising the lower-right entry to 1.

    Support: Q_p^x times [[Z_p^x, p^{-1}Z_p], [p^2 Z_p, Z_p^x]].
    """
    p = spec.p
    if g.p != p:
        raise ValueError("matrix prime does not match the test function")
    if g.d.is_exact_zero or g.a.is_exact_zero:
        return 0.0j
    if g.d.is_indeterminate:
        # lower-right entry must be a unit after scaling; its valuation is unknown
        if g.a.is_indeterminate or g.a.valuation < g.d.valuation:
            return 0.0j
        raise InsufficientPrecision("lower-right entry has no known digits")
    w = g.d.valuation
    if not g.a.val_equals(w):
        return 0.0j
    if not g.b.val_at_least(w - 1):
        return 0.0j
    if not g.c.val_at_least(w + 2):
        return 0.0j
    dinv = g.d.inverse()
    a1 = g.a * dinv
    b1 = g.b * dinv * p
    c1 = g.c * dinv / (p * p)
    B = b1.residue(1)
    C = (c1 * spec.m_p / a1).residue(1)
    return (p + 1) * _psi_tilde_sum(p, B, C)


def eval_f_twisted(spec: LocalTestSpec, g: Matrix2Local) -> complex:
    """Twisted test function; support Q_p^x [[Z_p, p^{-2}Z_p^x], [pZ_p^x, Z_p]].

    The formula is invariant under unit scalars, so the argument is normalised
    to have lower-left entry exactly p.
    """
    p = spec.p
    if g.p != p:
        raise ValueError("matrix prime does not match the test function")
    if g.c.is_exact_zero:
        return 0.0j
    if g.c.is_indeterminate:
        raise InsufficientPrecision("lower-left entry has no known digits")
    z = g.c.inverse() * p
    h = g.scale(z)
    if not h.b.val_equals(-2):
        return 0.0j
    if not h.a.val_at_least(0) or not h.d.val_at_least(0):
        return 0.0j
    c_lab = h.a.residue(1)
    d_lab = h.b * (p * p)
    b_lab = h.d
    if b_lab.is_exact_zero:
        C = 0
    else:
        C = (b_lab * spec.m_p / d_lab).residue(1)
    return (p + 1) * _psi_tilde_sum(p, c_lab, C)


def local_kloosterman(theta1: int, theta2: int, p: int, t: int) -> complex:
    """S_p(theta1, theta2; p^t) = sum over units x of psi_p(-(theta1 x + theta2 x^{-1}) / p^t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 1.0 + 0.0j
    q = p**t
    xs = np.array([x for x in range(1, q) if x % p], dtype=np.int64)
    inv = np.array([pow(int(x), -1, q) for x in xs], dtype=np.int64)
    phase = ((theta1 % q) * xs + (theta2 % q) * inv) % q
    # psi_p(-u/q) = exp(+2 pi i u / q) for an integer u
    return complex(np.exp(2j * np.pi * phase / q).sum())


# --------------------------------------------------------- orbital integrals

def orbital_first_local(spec: LocalTestSpec) -> float:
    p = spec.p
    return float(p * (p + 1)) if spec.variant == "plain" else 0.0


def _unit_residue(a: PAdicApprox, k: int) -> int:
    if a.unit == 0:
        raise InsufficientPrecision("a has no known unit digits")
    if a.precision < k:
        raise InsufficientPrecision(f"need {k} unit digits of a, have {a.precision}")
    return a.unit % a.p**k


def orbital_second_local_closed(spec: LocalTestSpec, a: PAdicApprox) -> complex:
    """Closed forms of the second-type local integral at p | N, as printed.

    plain:   v(a) = -4       -> psi_p(-m/p) p(p+1) S_p(1, p^4 a; p^2)
             v(a) = -2t, t>=3 -> p(p+1) S_p(1, p^{2t} a; p^t)
    twisted: v(a) = -3 and p^3 a = -m mod p -> p^2 (p+1)
    otherwise 0.
    """
    p, m = spec.p, spec.m_p
    if a.is_exact_zero:
        return 0.0j
    v = a.valuation
    if spec.variant == "twisted":
        if v == -3 and (_unit_residue(a, 1) + m) % p == 0:
            return complex(p * p * (p + 1))
        return 0.0j
    if v == -4:
        u = _unit_residue(a, 2)
        return psi_p(Fraction(-m, p), p) * p * (p + 1) * local_kloosterman(1, u, p, 2)
    if v <= -6 and v % 2 == 0:
        t = -v // 2
        return p * (p + 1) * local_kloosterman(1, _unit_residue(a, t), p, t)
    return 0.0j


def orbital_second_local_central(spec: LocalTestSpec, a: PAdicApprox) -> complex:
    """Second-type local integral for the centrally normalised test function.

    Differs from ``orbital_second_local_closed`` only when v(a) = -4 and
    p > 2, where the value is p(p+1) S_p(1, p^4 a - p m_p; p^2).
    """
    p, m = spec.p, spec.m_p
    if spec.variant == "plain" and not a.is_exact_zero and a.valuation == -4:
        u = _unit_residue(a, 2)
        return p * (p + 1) * local_kloosterman(1, u - p * m, p, 2)
    return orbital_second_local_closed(spec, a)


def _vp_array(X: np.ndarray, p: int, cap: int) -> np.ndarray:
    """p-adic valuation of each entry, with 0 mapped to ``cap``."""
    v = np.zeros(X.shape, dtype=np.int64)
    Y = X.copy()
    zero = Y == 0
    Y[zero] = 1
    while True:
        m = (Y % p == 0)
        if not m.any():
            break
        v[m] += 1
        Y[m] //= p
    v[zero] = cap
    return v


def _inv_mod_p_array(X: np.ndarray, p: int) -> np.ndarray:
    table = np.zeros(p, dtype=np.int64)
    for r in range(1, p):
        table[r] = pow(r, -1, p)
    return table[X % p]


def _a_integer_part(a: PAdicApprox, shift: int, digits: int) -> int:
    """(a * p^shift) mod p^digits for shift + v(a) >= 0, checking precision."""
    p = a.p
    e = a.valuation + shift
    if e < 0:
        raise ValueError("a * p^shift is not integral")
    if e >= digits:
        return 0
    need = digits - e
    if a.precision < need:
        raise InsufficientPrecision(f"need {need} unit digits of a, have {a.precision}")
    return (a.unit % p**need) * p**e


def orbital_second_local_bruteforce(
    spec: LocalTestSpec,
    a: PAdicApprox,
    depth: int | None = None,
    normalization: Literal["central", "p_power"] = "central",
) -> complex:
    """Second-type local integral by summing the integrand over residues.

    The integrand is f([[-x, -a-xy], [1, y]]) conj(psi_p(x)) psi_p(y).
    Both x and y run over p^{-T} Z_p / Z_p, each coset of measure 1; the
    integrand is constant on cosets and vanishes off this lattice.  The test
    function is evaluated cell by cell from its support description and
    character-sum formula (the same rules as ``eval_f``/``eval_f_twisted``,
    vectorised), never from the closed forms.
    """
    p, m = spec.p, spec.m_p
    if a.is_exact_zero:
        return 0.0j
    if a.unit == 0:
        raise InsufficientPrecision("a has no known digits")
    v = a.valuation
    T = max(2, math.ceil(-v / 2)) if depth is None else depth
    if T < max(2, math.ceil(-v / 2)):
        raise ValueError("depth too small to cover the support")
    q = p**T
    K = _char_table(p)
    grid = np.arange(q, dtype=np.int64)
    vY = _vp_array(grid, p, T)
    total = 0.0j
    twist = spec.variant == "twisted"
    for X in range(q):
        sX = T if X == 0 else _vp_array(np.array([X]), p, T)[0]
        if twist:
            # need v(p x) >= 0 and v(p y) >= 0
            if sX < T - 1:
                continue
            mask = vY >= T - 1
            if not mask.any():
                continue
            Ys = grid[mask]
            # a + xy = p^{-2T} W with W = a p^{2T} + X Y
            digits = 2 * T - 2
            W = (_a_integer_part(a, 2 * T, digits) + X * Ys) % p**digits
            vW = _vp_array(W, p, digits)
            ok = vW == 2 * T - 3
            if not ok.any():
                continue
            Ys, W = Ys[ok], W[ok]
            c_lab = (-(X // p ** (T - 1))) % p
            b_lab = (Ys // p ** (T - 1)) % p
            d_unit = (-(W // p ** (2 * T - 3))) % p
            Cidx = (m * b_lab * _inv_mod_p_array(d_unit, p)) % p
            vals = (p + 1) * K[c_lab, Cidx]
        else:
            s = sX
            if s > T - 2:
                continue
            Ys = grid[vY == s]
            if Ys.size == 0:
                continue
            # W = a p^{2T} + X Y; support needs v(W) >= T + s - 1
            if v + 2 * T < 0:
                continue
            digits = T + s
            W = (_a_integer_part(a, 2 * T, digits) + X * Ys) % p**digits
            vW = _vp_array(W, p, digits)
            ok = vW >= T + s - 1
            if not ok.any():
                continue
            Ys, W = Ys[ok], W[ok]
            top = (W // p ** (T + s - 1)) % p
            Yunit = (Ys // p**s) % p
            if normalization == "central":
                Bidx = (-top * _inv_mod_p_array(Yunit, p)) % p
            elif normalization == "p_power":
                Bidx = (-top) % p
            else:
                raise ValueError("normalization must be 'central' or 'p_power'")
            Xunit = (X // p**s) % p
            # C = m (c/a) with c/a = -p^{T-2-s} / X'
            Cval = (-m * pow(int(Xunit), -1, p)) % p if s == T - 2 else 0
            vals = (p + 1) * K[Bidx, Cval]
        phase = np.exp(2j * np.pi * ((X - Ys) % q) / q)
        total += complex((vals * phase).sum())
    return total


def orbital_second_unramified(r1: int, r2: int, p: int, a: PAdicApprox) -> complex:
    """Second-type local integral at p not dividing N for the spherical test function.

    Nonzero only when v(a) = r1 + r2 - 2t with t >= 0, where it equals
    p^{-r1-r2} S_p(p^{r1}, a p^{2t-r1}; p^t).
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("r1 and r2 must be nonnegative")
    if a.is_exact_zero:
        return 0.0j
    v = a.valuation
    diff = r1 + r2 - v
    if diff < 0 or diff % 2:
        return 0.0j
    t = diff // 2
    scale = float(p) ** (-(r1 + r2))
    if t == 0:
        return complex(scale)
    theta2 = _a_integer_part(a, 2 * t - r1, t)
    return scale * local_kloosterman(p**r1, theta2, p, t)


def orbital_second_unramified_bruteforce(r1: int, r2: int, p: int, a: PAdicApprox) -> complex:
    """Residue-sum oracle for ``orbital_second_unramified``.

    Integrates 1_{Z K}(z [[-p^{r2-r1} x, -p^{-r1}(a+xy)], [p^{r2}, y]])
    conj(psi_p(x)) psi_p(y) over x in p^{lo_x} Z_p, y in p^{lo_y} Z_p, where
    the lattices come from the necessary conditions z y, z p^{r2-r1} x in Z_p.
    Cosets of p^{hi} Z_p carry measure p^{-hi}.
    """
    if a.is_exact_zero:
        return 0.0j
    v = a.valuation
    if (r1 + r2 - v) % 2 or v > r1 + r2:
        # v(det) is odd or no scalar makes the lower-left entry integral
        return 0.0j
    t = (r1 + r2 - v) // 2
    vz = t - r2
    lo_x, lo_y = r1 - t - 1, r2 - t - 1  # one digit of slack below the support
    hi_x, hi_y = r1 + 1, r2 + 1
    nX, nY = p ** (hi_x - lo_x), p ** (hi_y - lo_y)
    X = np.arange(nX, dtype=np.int64)[:, None]
    Y = np.arange(nY, dtype=np.int64)[None, :]
    cap = 10**6
    vX = _vp_array(np.arange(nX, dtype=np.int64), p, cap)[:, None]
    vYa = _vp_array(np.arange(nY, dtype=np.int64), p, cap)[None, :]
    # a + xy = p^{lo_x + lo_y} (a p^{-(lo_x+lo_y)} + X Y) = p^{lo_x+lo_y} W
    shift = -(lo_x + lo_y)
    digits = (r1 + r2 - t) - (lo_x + lo_y) + 1
    W = (_a_integer_part(a, shift, digits) + X * Y) % p**digits
    vW = _vp_array(W.ravel(), p, digits).reshape(W.shape)
    e11 = vz + r2 - r1 + lo_x + vX
    e12 = vz - r1 + lo_x + lo_y + vW
    e21 = vz + r2
    e22 = vz + lo_y + vYa
    # v(det(z g)) = 2 vz + r2 - r1 + v = 0, so membership in K_p is integrality;
    # `digits` leaves one spare digit beyond the integrality threshold of e12
    inK = (e11 >= 0) & (e12 >= 0) & (e21 >= 0) & (e22 >= 0)
    rx = (X % p ** max(-lo_x, 0)) / p ** max(-lo_x, 0) if lo_x < 0 else np.zeros_like(X, dtype=float)
    ry = (Y % p ** max(-lo_y, 0)) / p ** max(-lo_y, 0) if lo_y < 0 else np.zeros_like(Y, dtype=float)
    phase = np.exp(2j * np.pi * (rx - ry))
    weight = float(p) ** (-(hi_x + hi_y))
    return complex((phase * inK).sum() * weight)

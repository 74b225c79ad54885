"""Newform fixtures and the spectral sides of the trace formulas."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from . import arith
from .errors import (
    DomainError,
    FixtureIncomplete,
    HeckeRelationViolation,
    HorizonExceeded,
    InvalidQuery,
    SchemaError,
)
from .geometric import GeometricSeries
from .special import TestFunctionH

__all__ = [
    "NewformRecord",
    "FixtureSet",
    "ComparisonReport",
    "load_fixtures",
    "packaged_fixture",
    "parse_fixtures",
    "cusp_form_dimension",
    "new_cusp_form_dimension",
    "spectral_petersson",
    "spectral_petersson_twisted",
    "spectral_kuznetsov",
    "compare",
]

HECKE_TOL = 1e-6
RAMANUJAN_SLACK = 0.1


@dataclass(frozen=True)
class NewformRecord:
    label: str
    level: int
    weight: Union[int, str]
    hecke: dict[int, float]
    l_sym2: float
    root_number: int
    t: float | None = None

    def lam(self, n: int) -> float:
        return self.hecke[n]


@dataclass(frozen=True)
class FixtureSet:
    N: int
    weight: Union[int, str]
    records: tuple[NewformRecord, ...]
    eigenvalue_horizon: int
    provenance: str
    source: str | None = field(default=None, compare=False)

    @property
    def is_maass(self) -> bool:
        return self.weight == "maass"


# ------------------------------------------------------ dimension formulas

def _legendre_minus(d: int, p: int) -> int:
    """Kronecker symbol (-d / p) for d in {1, 3}."""
    if p == 2:
        return 0 if d == 1 else -1
    if d == 1:
        return 1 if p % 4 == 1 else -1
    if p == 3:
        return 0
    return 1 if p % 3 == 1 else -1


def cusp_form_dimension(k: int, M: int) -> int:
    """dim S_k(Gamma_0(M)) for even k >= 2, by the genus formula."""
    if k < 2 or k % 2:
        raise InvalidQuery("weight must be even and at least 2")
    fac = arith.factorize(M)
    mu = M
    for p in fac:
        mu = mu * (p + 1) // p
    nu2 = 0 if M % 4 == 0 else math.prod(1 + _legendre_minus(1, p) for p in fac)
    nu3 = 0 if M % 9 == 0 else math.prod(1 + _legendre_minus(3, p) for p in fac)
    cusps = sum(arith.totient(math.gcd(d, M // d)) for d in arith.divisors(M))
    genus_x12 = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * cusps
    if genus_x12 % 12:
        raise ArithmeticError("genus formula produced a non-integer")
    g = genus_x12 // 12
    if k == 2:
        return g
    return (k - 1) * (g - 1) + (k // 4) * nu2 + (k // 3) * nu3 + (k // 2 - 1) * cusps


def new_cusp_form_dimension(k: int, M: int) -> int:
    """Dimension of the new subspace, by Moebius-type inversion over levels."""

    def beta(n: int) -> int:
        out = 1
        for _, e in arith.factorize(n).items():
            out *= {0: 1, 1: -2, 2: 1}.get(e, 0)
        return out

    return sum(beta(M // d) * cusp_form_dimension(k, d) for d in arith.divisors(M))


# ------------------------------------------------------------ loading

def _require(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool):
        raise SchemaError(f"{where}: key {key!r} has type {type(val).__name__}")
    return val


def _parse_record(raw: dict, i: int, N: int, weight) -> NewformRecord:
    where = f"records[{i}]"
    if not isinstance(raw, dict):
        raise SchemaError(f"{where} is not an object")
    label = _require(raw, "label", str, where)
    level = _require(raw, "level", int, where)
    if level != N**3:
        raise SchemaError(f"{where}: level {level} is not N^3 = {N**3}")
    hecke_raw = _require(raw, "hecke", dict, where)
    hecke: dict[int, float] = {}
    for key, val in hecke_raw.items():
        try:
            n = int(key)
        except ValueError as exc:
            raise SchemaError(f"{where}: hecke key {key!r} is not an integer") from exc
        if n < 1 or not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SchemaError(f"{where}: bad hecke entry {key!r}: {val!r}")
        hecke[n] = float(val)
    l_sym2 = float(_require(raw, "l_sym2", (int, float), where))
    if not l_sym2 > 0:
        raise SchemaError(f"{where}: l_sym2 must be positive")
    eps = _require(raw, "root_number", int, where)
    if eps not in (1, -1):
        raise SchemaError(f"{where}: root_number must be +1 or -1")
    t = None
    if weight == "maass":
        t = float(_require(raw, "t", (int, float), where))
    return NewformRecord(label=label, level=level, weight=weight, hecke=hecke, l_sym2=l_sym2, root_number=eps, t=t)


def _check_ramanujan(rec: NewformRecord, N: int) -> None:
    for p, val in rec.hecke.items():
        if N % p and arith.factorize(p) == {p: 1} and abs(val) > 2 + RAMANUJAN_SLACK:
            raise SchemaError(f"{rec.label}: |lambda({p})| = {abs(val)} exceeds 2 + {RAMANUJAN_SLACK}")


def _check_hecke(rec: NewformRecord, N: int, horizon: int) -> None:
    lam = rec.hecke
    for m in range(2, horizon + 1):
        for n in range(m, horizon // m + 1):
            if m not in lam or n not in lam or m * n not in lam:
                continue
            g = math.gcd(m, n)
            rhs = 0.0
            for d in arith.divisors(g):
                if math.gcd(d, N) != 1:
                    continue
                idx = m * n // (d * d)
                if idx not in lam:
                    break
                rhs += lam[idx]
            else:
                lhs = lam[m] * lam[n]
                if abs(lhs - rhs) > HECKE_TOL:
                    raise HeckeRelationViolation(rec.label, m, n, lhs, rhs)


def parse_fixtures(doc: dict, source: str | None = None, require_complete: bool = True) -> FixtureSet:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    N = _require(doc, "N", int, "top level")
    if N < 1 or not arith.is_squarefree(N):
        raise SchemaError(f"N = {N} must be a squarefree positive integer")
    weight = doc.get("weight")
    if weight != "maass" and (not isinstance(weight, int) or isinstance(weight, bool) or weight < 4 or weight % 2):
        raise SchemaError(f"weight must be an even integer >= 4 or 'maass', got {weight!r}")
    records_raw = _require(doc, "records", list, "top level")
    horizon = _require(doc, "eigenvalue_horizon", int, "top level")
    provenance = _require(doc, "provenance", str, "top level")
    records = tuple(_parse_record(r, i, N, weight) for i, r in enumerate(records_raw))
    for rec in records:
        missing = [n for n in range(1, horizon + 1) if n not in rec.hecke]
        if missing:
            raise SchemaError(f"{rec.label}: eigenvalue_horizon {horizon} but lambda({missing[0]}) is absent")
        if abs(rec.hecke[1] - 1.0) > HECKE_TOL:
            raise HeckeRelationViolation(rec.label, 1, 1, rec.hecke[1], 1.0)
        _check_ramanujan(rec, N)
        _check_hecke(rec, N, horizon)
    if require_complete and records and weight != "maass":
        expected = new_cusp_form_dimension(weight, N**3)
        if len(records) != expected:
            raise FixtureIncomplete(
                f"level {N**3}, weight {weight}: new subspace has dimension {expected}, fixture has {len(records)} forms"
            )
    return FixtureSet(N=N, weight=weight, records=records, eigenvalue_horizon=horizon, provenance=provenance, source=source)


def load_fixtures(path: str | Path, require_complete: bool = True) -> FixtureSet:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return parse_fixtures(doc, source=str(path), require_complete=require_complete)


def packaged_fixture(weight: int) -> FixtureSet:
    """The bundled level-8 fixture for weight 4 or 6."""
    ref = resources.files("cubictrace") / "data" / f"level8_weight{weight}.json"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled fixture for weight {weight}")
    return parse_fixtures(json.loads(ref.read_text(encoding="utf-8")), source=str(ref))


# ------------------------------------------------------- spectral sides

def _check_indices(fs: FixtureSet, n1: int, n2: int) -> None:
    if n1 < 1 or n2 < 1:
        raise InvalidQuery("n1 and n2 must be positive")
    if math.gcd(n1 * n2, fs.N) != 1:
        raise InvalidQuery(f"gcd(n1*n2, N) must be 1 (N = {fs.N})")
    if max(n1, n2) > fs.eigenvalue_horizon:
        raise HorizonExceeded(f"need lambda({max(n1, n2)}) but fixture stops at {fs.eigenvalue_horizon}")


def spectral_petersson(fs: FixtureSet, n1: int, n2: int) -> float:
    _check_indices(fs, n1, n2)
    return math.fsum(r.hecke[n1] * r.hecke[n2] / r.l_sym2 for r in fs.records)


def spectral_petersson_twisted(fs: FixtureSet, n1: int, n2: int) -> float:
    """Root-number weighted sum; the weights are the classical signs of the functional equation."""
    _check_indices(fs, n1, n2)
    return math.fsum(r.root_number * r.hecke[n1] * r.hecke[n2] / r.l_sym2 for r in fs.records)


def spectral_kuznetsov(fs: FixtureSet, h: TestFunctionH, n1: int, n2: int) -> float:
    if fs.records and not fs.is_maass:
        raise DomainError("the Kuznetsov side needs Maass fixtures")
    _check_indices(fs, n1, n2)
    if h.is_zero:
        return 0.0
    return math.fsum(
        float(np.real(h(np.array([r.t], dtype=complex))[0])) * r.hecke[n1] * r.hecke[n2] / r.l_sym2
        for r in fs.records
    )


@dataclass(frozen=True)
class ComparisonReport:
    spectral: float
    geometric: complex | float
    abs_discrepancy: float
    rel_discrepancy: float
    tail_bound: float
    rel_tol: float
    passed: bool
    note: str

    def as_dict(self) -> dict:
        g = self.geometric
        return {
            "spectral": self.spectral,
            "geometric": g.real if isinstance(g, complex) else g,
            "abs_discrepancy": self.abs_discrepancy,
            "rel_discrepancy": self.rel_discrepancy,
            "tail_bound": self.tail_bound,
            "rel_tol": self.rel_tol,
            "pass": self.passed,
            "note": self.note,
        }


def compare(spec_value: float, geo: GeometricSeries, rel_tol: float = 1e-3) -> ComparisonReport:
    """Pass when the relative discrepancy is at most ``rel_tol`` or the absolute one is within the tail bound."""
    g = geo.total
    diff = abs(spec_value - g)
    scale = abs(g)
    rel = diff / scale if scale > 0 else (0.0 if diff == 0 else math.inf)
    if rel <= rel_tol:
        passed, note = True, "within tolerance"
    elif diff <= geo.tail_bound:
        passed, note = True, "within truncation budget"
    else:
        passed, note = False, "discrepancy exceeds tolerance and tail bound"
    return ComparisonReport(
        spectral=spec_value, geometric=g, abs_discrepancy=diff, rel_discrepancy=rel,
        tail_bound=geo.tail_bound, rel_tol=rel_tol, passed=passed, note=note,
    )

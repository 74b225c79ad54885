"""Exception types shared across the package."""

from __future__ import annotations


class CubicTraceError(Exception):
    """Base class for every error raised by this package."""


class InvalidQuery(CubicTraceError, ValueError):
    """Parameters violate a coprimality or range precondition."""


class NotSquarefree(InvalidQuery):
    pass


class InsufficientPrecision(CubicTraceError):
    """A p-adic support condition cannot be decided at the carried precision."""


class PoleAtNonpositiveInteger(CubicTraceError, ValueError):
    pass


class SeriesDiverges(CubicTraceError, ValueError):
    pass


class SeriesNotConverged(CubicTraceError):
    pass


class BudgetExceeded(CubicTraceError):
    """A quadrature or truncation target could not be met within the budget."""


class DomainError(CubicTraceError, ValueError):
    pass


class SchemaError(CubicTraceError, ValueError):
    pass


class HeckeRelationViolation(CubicTraceError):
    def __init__(self, label: str, m: int, n: int, lhs: float, rhs: float):
        self.label, self.m, self.n, self.lhs, self.rhs = label, m, n, lhs, rhs
        super().__init__(
            f"{label}: lambda({m}) lambda({n}) = {lhs!r} but the Hecke relation gives {rhs!r}"
        )


class HorizonExceeded(CubicTraceError):
    pass


class FixtureIncomplete(CubicTraceError):
    """The fixture does not contain the whole new subspace it claims to describe."""

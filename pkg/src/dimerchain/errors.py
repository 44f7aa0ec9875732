"""Exception hierarchy.

Every error carries a machine-readable ``category`` and the process exit code
the CLI maps it to.
"""

from __future__ import annotations


class DimerChainError(Exception):
    category = "error"
    exit_code = 1

    def to_dict(self) -> dict:
        return {"category": self.category, "message": str(self)}


class InvalidGeometryError(DimerChainError, ValueError):
    category = "invalid-geometry"
    exit_code = 2


class DomainError(DimerChainError, ValueError):
    """Argument outside the domain where a formula is defined."""

    category = "domain"
    exit_code = 2


class NotAnEigenvalueError(DomainError):
    category = "not-an-eigenvalue"


class NegativeEigenvalueError(DomainError):
    category = "negative-eigenvalue"


class InsufficientDataError(DomainError):
    category = "insufficient-data"


class EmptyGapError(DimerChainError, ValueError):
    category = "empty-gap"
    exit_code = 3


class SolverFailureError(DimerChainError, RuntimeError):
    category = "solver-failure"
    exit_code = 4


class OracleSizeError(SolverFailureError):
    category = "oracle-size"


class TheoryViolationError(SolverFailureError):
    """A computed result contradicts a proven statement; indicates a bug."""

    category = "theory-violation"


class OutputError(DimerChainError, OSError):
    category = "io"
    exit_code = 5

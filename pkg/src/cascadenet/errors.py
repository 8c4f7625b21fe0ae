"""Exception hierarchy.

Errors fall in three families that the CLI maps to exit codes:
input problems (2), analysis infeasibility (3) and internal assertion
failures (4).
"""

from __future__ import annotations


class CascadeError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class InputError(CascadeError):
    exit_code = 2


class AnalysisError(CascadeError):
    exit_code = 3


class InternalAssertion(CascadeError):
    exit_code = 4


class ValidationFailure(InputError):
    """Network or scenario violates one or more invariants.

    ``violations`` holds every problem found, not only the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        msg = "; ".join(self.violations) if self.violations else "validation failed"
        super().__init__(msg)


class ParseError(InputError):
    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class LengthMismatch(InputError, ValueError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class NegativeEntry(InputError, ValueError):
    pass


class NotSchur(AnalysisError):
    """Some column of C sums to 1 or more, so (I - C) may not be inverse-positive."""


class Singular(AnalysisError):
    pass


class TooLarge(AnalysisError):
    pass


class InconsistentEquilibrium(AnalysisError):
    pass


class IoFailure(CascadeError):
    exit_code = 2


class NonMonotoneTrace(InternalAssertion):
    pass


class MonotoneViolation(InternalAssertion):
    pass

"""Exceptions raised by the curie_weiss library."""
from typing import Optional


class CurieWeissError(Exception):
    """Base class of every library error."""


class DomainError(CurieWeissError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ResourceBudgetError(CurieWeissError):
    """An exact computation would exceed the configured work budget."""


class BracketError(CurieWeissError, ValueError):
    """A root-finding target is not enclosed by the supplied bracket."""


class MonotonicityError(CurieWeissError, AssertionError):
    """A function required to be increasing was found not to be."""


class TargetRangeError(CurieWeissError, ValueError):
    """An exact moment falls outside the range an asymptotic formula can invert."""


class SeparationViolated(CurieWeissError):
    """The high/low regime boundaries overlap at the given population size."""

    def __init__(self, group: int, lhs: float, rhs: float):
        self.group = group
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(
            f"Separation condition violated for group {group}: "
            f"high boundary {lhs:.6g} is not below low boundary {rhs:.6g}"
        )


class SampleFormatError(CurieWeissError, ValueError):
    """A sample file could not be parsed or holds non-spin entries."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        self.row = row
        self.column = column
        location = ''
        if row is not None:
            location = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class AuditViolation(CurieWeissError, AssertionError):
    """An audited sample breaks an estimator-equivalence bound."""

    def __init__(self, message: str, digest: str):
        self.digest = digest
        super().__init__(f"{message} [sample {digest}]")


class ConfigError(CurieWeissError, ValueError):
    """An experiment configuration file does not match the schema."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ''
        super().__init__(f"{prefix}{message}")

"""Exception hierarchy for fsbench."""
from typing import Optional


class FsBenchError(Exception):
    """Base class for every error raised by fsbench services."""


class DataError(FsBenchError):
    """Input data could not be parsed or violates a Dataset invariant."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ValidationError(FsBenchError):
    """A parameter or combination of parameters is invalid."""


class MethodError(FsBenchError):
    """A selection method cannot run on the given data (e.g. ReliefF on one class)."""


class NotSeparableError(FsBenchError):
    """Every node holds samples of the class, so no dissimilarity can be measured."""

"""Exception taxonomy shared across the package.

Validation problems raise specific subclasses so callers (and the CLI /
service layers) can map them to exit codes and HTTP statuses without
string matching.
"""

from __future__ import annotations


class PmesiiError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(PmesiiError):
    """A scenario/plan document has missing, extra, or mistyped fields."""


class DimensionError(PmesiiError):
    """Vector/matrix shapes disagree with the variable roster or each other."""


class RangeError(PmesiiError):
    """A numeric value lies outside its declared bounds."""


class ScheduleError(PmesiiError):
    """Horizon/period arithmetic is inconsistent (e.g. not divisible)."""


class ConstraintError(PmesiiError):
    """A plan or submission violates budget, concurrency, or protocol rules."""


class EmptyInputError(PmesiiError):
    """An operation that needs at least one element received none."""


class UnknownSourceError(PmesiiError):
    """An observation source id is not declared in the scenario."""


class UnknownVariableError(PmesiiError):
    """A variable id is not part of the scenario roster."""


class InsufficientDataError(PmesiiError):
    """Too few logged transitions to recalibrate the model."""


class CorruptLogError(PmesiiError):
    """An event log failed its hash-chain or framing check."""


class NotFoundError(PmesiiError):
    """A persisted session (or other stored record) does not exist."""


class CellTimeoutError(PmesiiError, TimeoutError):
    """A live cell missed its submission deadline."""

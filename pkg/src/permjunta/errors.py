"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the code it
should produce.
"""

from __future__ import annotations


class PermJuntaError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class SizeMismatchError(PermJuntaError, ValueError):
    """Two objects live on ground sets of different sizes."""


class InfeasibleClassError(PermJuntaError, ValueError):
    """A restriction class is contradictory or empty where it must not be."""


class ConflictError(PermJuntaError, ValueError):
    """Two partial bijections cannot be merged."""


class ContractError(PermJuntaError, ValueError):
    """A precondition or hypothesis gate of an operation failed."""


class DegenerateInputError(ContractError):
    """Input has zero mass where an operation divides by it."""


class ExistenceFailureError(PermJuntaError, RuntimeError):
    """An exhaustive search that should succeed found nothing."""


class InvariantViolation(PermJuntaError, AssertionError):
    """Internal consistency check failed; indicates a bug."""


class ResourceLimitError(PermJuntaError, RuntimeError):
    """Requested computation exceeds a configured budget."""

    exit_code = 3


class ParseError(PermJuntaError, ValueError):
    """Malformed input file."""

    exit_code = 4

"""Exact small-n machinery for permutation families that avoid a given agreement count."""

from permjunta.errors import (
    ContractError,
    InvariantViolation,
    ParseError,
    PermJuntaError,
    ResourceLimitError,
)
from permjunta.perm import (
    EMPTY,
    Junta,
    PartialBijection,
    PermFamily,
    RestrictionClass,
    permutation,
)

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "ContractError",
    "InvariantViolation",
    "Junta",
    "ParseError",
    "PartialBijection",
    "PermFamily",
    "PermJuntaError",
    "ResourceLimitError",
    "RestrictionClass",
    "permutation",
]

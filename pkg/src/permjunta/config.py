"""Experiment configuration: free parameters, budgets and their hard ceilings."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from permjunta.errors import ContractError, ResourceLimitError
from permjunta.exact import as_fraction, format_fraction

SYMBOLIC_EPSILON = "n^{-1/3}"

CEILINGS = {"spectral": 8, "diagonalize": 5, "search": 6, "decompose": 8, "surgery": 7}
DEFAULT_BUDGETS = {"spectral": 8, "diagonalize": 5, "search": 5, "decompose": 8, "surgery": 7}


def resolve_epsilon(value: str | Fraction | int | float, n: int) -> Fraction:
    """Rational ε; the symbolic default n^{-1/3} is rounded to a nearby fraction."""
    if isinstance(value, str) and value.replace(" ", "") in (SYMBOLIC_EPSILON, "n^(-1/3)", "n**(-1/3)"):
        return Fraction(n ** (-1 / 3)).limit_denominator(1000)
    return as_fraction(value)


def env_threads(default: int = 1) -> int:
    raw = os.environ.get("PERMJUNTA_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ContractError(f"PERMJUNTA_THREADS={raw!r} is not an integer") from exc


@dataclass
class ExperimentConfig:
    n: int = 7
    t: int = 1
    r: int = 2
    s: int | None = None
    epsilon: str = SYMBOLIC_EPSILON
    seed: int = 0
    deterministic: bool = True
    threads: int = 1
    waive: bool = False
    budgets: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_BUDGETS))

    def __post_init__(self) -> None:
        for key, value in self.budgets.items():
            cap = CEILINGS.get(key)
            if cap is None:
                raise ContractError(f"unknown budget {key!r}")
            if value > cap:
                raise ContractError(f"budget {key} = {value} exceeds the hard ceiling {cap}")
        if self.n < 1 or self.t < 1 or self.r < 1:
            raise ContractError("n, t and r must be positive")

    @property
    def regularity_s(self) -> int:
        return self.s if self.s is not None else 2 * self.r - 1

    def eps(self) -> Fraction:
        return resolve_epsilon(self.epsilon, self.n)

    def require_budget(self, key: str, n: int) -> None:
        if n > self.budgets[key]:
            raise ResourceLimitError(
                f"{key} requested for n = {n}; the budget is n = {self.budgets[key]} (hard ceiling n = {CEILINGS[key]})"
            )

    def to_json(self) -> dict:
        out = asdict(self)
        out["epsilon_resolved"] = format_fraction(self.eps())
        return out

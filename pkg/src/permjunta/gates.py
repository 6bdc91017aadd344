"""Hypothesis gates: size conditions that only hold for large n.

Constructions that are proved under asymptotic hypotheses still run at desk
scale.  Each hypothesis is recorded as a gate; with ``enforce=True`` a failed
gate raises, otherwise it is logged as waived and the caller re-checks the
conclusions instead of trusting them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from permjunta.errors import ContractError


@dataclass(frozen=True)
class Gate:
    name: str
    condition: str
    satisfied: bool
    waived: bool = False

    def status(self) -> str:
        if self.satisfied:
            return "satisfied"
        return "waived" if self.waived else "failed"

    def to_json(self) -> dict:
        return {"name": self.name, "condition": self.condition, "status": self.status()}


@dataclass
class GateLog:
    enforce: bool = True
    gates: list[Gate] = field(default_factory=list)

    def require(self, name: str, ok: bool, condition: str) -> bool:
        gate = Gate(name, condition, bool(ok), waived=not ok and not self.enforce)
        self.gates.append(gate)
        if not ok and self.enforce:
            raise ContractError(f"gate '{name}' failed: {condition}")
        return bool(ok)

    @property
    def all_satisfied(self) -> bool:
        return all(g.satisfied for g in self.gates)

    def extend(self, other: "GateLog") -> None:
        self.gates.extend(other.gates)

    def lines(self) -> list[str]:
        return [f"gate {g.name}: {g.status()} ({g.condition})" for g in self.gates]

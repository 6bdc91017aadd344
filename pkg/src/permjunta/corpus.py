"""Bundled constructed instances: surgery quadruples and small structured families."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from permjunta.errors import ContractError
from permjunta.perm import PartialBijection, PermFamily, RestrictionClass, sign

P = PartialBijection.from_one_based


@dataclass(frozen=True)
class SurgeryInstance:
    """Two random sub-families of S_n(M_i, N̄_i); the matchings are given 1-based."""

    name: str
    n: int
    M1: Sequence[tuple[int, int]]
    M2: Sequence[tuple[int, int]]
    N1: Sequence[tuple[int, int]] = ()
    N2: Sequence[tuple[int, int]] = ()
    density: float = 0.7
    seed: int = 0
    t: int | None = None
    covers: tuple[str, ...] = field(default_factory=tuple)

    def families(self) -> tuple[PermFamily, PermFamily]:
        out = []
        for k, (M, N) in enumerate(((self.M1, self.N1), (self.M2, self.N2))):
            rho, tau = P(M), P(N)
            amb = RestrictionClass(self.n, (rho,) if rho else (), (tau,) if tau else ())
            rng = random.Random(f"{self.name}/{self.seed}/{k}")
            out.append(PermFamily(amb, frozenset(m for m in sorted(amb.members()) if rng.random() < self.density)))
        return out[0], out[1]


SURGERY_CORPUS: tuple[SurgeryInstance, ...] = (
    SurgeryInstance("cycle4-n6", 6, [(1, 1), (2, 2)], [(2, 1), (1, 2)], covers=("cycle",)),
    SurgeryInstance(
        "cycle4-type1-n7", 7, [(1, 1), (2, 2), (3, 3)], [(2, 1), (1, 2), (3, 3)], density=0.5, covers=("cycle",)
    ),
    SurgeryInstance("cycle6-n7", 7, [(1, 1), (2, 2), (3, 3)], [(2, 1), (3, 2), (1, 3)], covers=("cycle",)),
    SurgeryInstance(
        "cycle4-forbidden-n7",
        7,
        [(1, 1), (2, 2)],
        [(2, 1), (1, 2), (3, 3)],
        N1=[(3, 3)],
        density=0.5,
        covers=("cycle",),
    ),
    SurgeryInstance("xpath2-n6", 6, [(1, 1), (3, 3)], [(2, 1), (3, 3)], t=2, covers=("even-x",)),
    SurgeryInstance("xpath2-n7", 7, [(1, 1)], [(2, 1)], density=0.4, covers=("even-x",)),
    SurgeryInstance("ypath2-n6", 6, [(1, 1)], [(1, 2)], covers=("even-y",)),
    SurgeryInstance("ypath4-n7", 7, [(1, 1), (2, 2)], [(1, 2), (2, 3)], covers=("even-y",)),
    SurgeryInstance("odd3-n6", 6, [(1, 1), (2, 2)], [(2, 1)], density=0.8, covers=("odd",)),
    SurgeryInstance("odd3-owner2-n7", 7, [(2, 1)], [(1, 1), (2, 2)], density=0.6, covers=("odd",)),
    SurgeryInstance("odd5-n7", 7, [(1, 1), (2, 2), (3, 3)], [(2, 1), (3, 2)], density=0.8, covers=("odd",)),
    SurgeryInstance(
        "odd-batch-n7", 7, [(1, 1), (2, 2), (4, 4), (5, 5)], [(2, 1), (5, 4)], density=0.9, covers=("odd",)
    ),
    SurgeryInstance(
        "cycle-then-xpath-n7",
        7,
        [(1, 1), (2, 2), (3, 3)],
        [(2, 1), (1, 2), (4, 3)],
        density=0.5,
        covers=("cycle", "even-x"),
    ),
)


def surgery_instance(name: str) -> SurgeryInstance:
    for inst in SURGERY_CORPUS:
        if inst.name == name:
            return inst
    raise ContractError(f"no bundled surgery instance named {name!r}; known: {[i.name for i in SURGERY_CORPUS]}")


def star(n: int, pairs: Sequence[tuple[int, int]]) -> PermFamily:
    """All permutations extending the given 1-based pairs, as a family in S_n."""
    return PermFamily.of(n, RestrictionClass(n, (P(pairs),) if pairs else ()).members())


def structured_families(n: int) -> list[tuple[str, PermFamily]]:
    """Five non-empty families with known structure on S_n (n >= 4)."""
    full = RestrictionClass(n)
    everything = list(full.members())
    return [
        ("star 1->1", star(n, [(1, 1)])),
        ("star 1->1, 2->2", star(n, [(1, 1), (2, 2)])),
        ("two stars", PermFamily.of(n, [p for p in everything if p[0] == 0 or p[1] == 1])),
        ("two fixed points in 1..3", PermFamily.of(n, [p for p in everything if sum(p[i] == i for i in range(3)) >= 2])),
        ("even permutations", PermFamily.of(n, [p for p in everything if sign(p) == 1])),
    ]


def random_family(n: int, density: float, rng: random.Random, ambient: RestrictionClass | None = None) -> PermFamily:
    amb = ambient if ambient is not None else RestrictionClass(n)
    return PermFamily(amb, frozenset(m for m in sorted(amb.members()) if rng.random() < density))


__all__ = [
    "SURGERY_CORPUS",
    "SurgeryInstance",
    "random_family",
    "star",
    "structured_families",
    "surgery_instance",
]

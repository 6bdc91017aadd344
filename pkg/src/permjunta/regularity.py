"""Weak regularity: split a family into a junta of uncaptureable slices plus a small remainder.

The decomposition grows a tree of partial bijections.  A node σ whose slice
F(σ) is captured by some π (μ(F(σ, π̄)) ≤ n^-r) branches on each point of π;
depth-r nodes are bad leaves and uncaptureable nodes are good leaves whose
labels generate the junta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from permjunta.errors import ContractError, ResourceLimitError
from permjunta.exact import format_fraction
from permjunta.perm import (
    EMPTY,
    Junta,
    PartialBijection,
    PermFamily,
)
from permjunta.pseudorandom import PseudorandomnessReport, check_captureable, measure_avoiding

MAX_N = 8

GOOD, BAD, INTERNAL = "good", "bad", "internal"


@dataclass
class TreeNode:
    label: PartialBijection
    status: str = INTERNAL
    capture: PartialBijection | None = None
    capture_measure: Fraction | None = None
    children: list["TreeNode"] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.label)

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def to_json(self) -> dict:
        out: dict = {"label": self.label.to_json(), "status": self.status}
        if self.capture is not None:
            out["capture"] = self.capture.to_json()
            out["capture_measure"] = format_fraction(self.capture_measure or 0)
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        return out


@dataclass
class DecompositionTree:
    root: TreeNode

    def nodes(self) -> list[TreeNode]:
        return list(self.root.walk())

    def leaves(self) -> list[TreeNode]:
        return [v for v in self.nodes() if v.status in (GOOD, BAD)]

    def good_leaves(self) -> list[TreeNode]:
        return [v for v in self.nodes() if v.status == GOOD]

    def bad_leaves(self) -> list[TreeNode]:
        return [v for v in self.nodes() if v.status == BAD]

    def internal_nodes(self) -> list[TreeNode]:
        return [v for v in self.nodes() if v.status == INTERNAL]

    def depth(self) -> int:
        return max(v.depth for v in self.nodes())

    def max_children(self) -> int:
        return max(len(v.children) for v in self.nodes())

    def render(self) -> str:
        lines = []

        def rec(v: TreeNode, indent: int) -> None:
            tag = v.status
            if v.capture is not None:
                tag += f", captured by {v.capture} at {format_fraction(v.capture_measure or 0)}"
            lines.append("  " * indent + f"{v.label} [{tag}]")
            for c in v.children:
                rec(c, indent + 1)

        rec(self.root, 0)
        return "\n".join(lines)

    def to_json(self) -> dict:
        return self.root.to_json()


@dataclass
class Decomposition:
    family: PermFamily
    r: int
    s: int
    junta: Junta
    slices: dict[PartialBijection, PermFamily]
    remainder: PermFamily
    tree: DecompositionTree

    def to_json(self) -> dict:
        return {
            "n": self.family.n,
            "r": self.r,
            "s": self.s,
            "junta": [g.to_json() for g in self.junta.generators],
            "slices": [
                {"generator": g.to_json(), "size": len(F), "measure": format_fraction(F.measure())}
                for g, F in self.slices.items()
            ],
            "remainder": self.remainder.to_json(),
            "tree": self.tree.to_json(),
        }


def _threshold(n: int, r: int) -> Fraction:
    return Fraction(1, n**r)


def _capture(
    F: PermFamily, sigma: PartialBijection, s: int, eps: Fraction, threads: int = 1
) -> PseudorandomnessReport:
    slice_ = F.restrict(agree=[sigma])
    free = min(len(slice_.ambient.free_points), len(slice_.ambient.free_values))
    return check_captureable(slice_, min(s, free), eps, threads)


def decompose(F: PermFamily, r: int, s: int, threads: int = 1) -> Decomposition:
    """Grow the capture tree for F ⊆ S_n and read off junta, slices and remainder."""
    n = F.n
    if not F.ambient.is_trivial():
        raise ContractError("decompose expects a family in all of S_n")
    if r < 1 or s < 1:
        raise ContractError("r and s must be at least 1")
    if n > MAX_N:
        raise ResourceLimitError(f"decompose requested for n = {n}; the ceiling is n = {MAX_N}")
    eps = _threshold(n, r)
    root = TreeNode(EMPTY)
    stack = [root]
    while stack:
        v = stack.pop()
        if v.depth == r:
            v.status = BAD
            continue
        rep = _capture(F, v.label, s, eps, threads)
        if not rep.verdict:
            v.status = GOOD
            continue
        v.capture, v.capture_measure = rep.witness, rep.attained
        assert rep.witness is not None
        v.children = [TreeNode(v.label.union(PartialBijection(((x, y),)))) for x, y in rep.witness]
        stack.extend(reversed(v.children))
    tree = DecompositionTree(root)
    junta = Junta(n, tuple(v.label for v in tree.good_leaves()))
    slices = {g: F.restrict(agree=[g]) for g in junta.generators}
    rest = PermFamily(F.ambient, frozenset(p for p in F.members if not junta.contains(p)))
    return Decomposition(F, r, s, junta, slices, rest, tree)


@dataclass(frozen=True)
class DecompositionReport:
    generator_sizes_ok: bool
    remainder_ok: bool
    slices_ok: bool
    slices_consistent: bool
    remainder_consistent: bool
    depth_ok: bool
    children_ok: bool
    leaves_ok: bool
    cover_ok: bool
    complexity: int
    complexity_ok: bool
    remainder_measure: Fraction
    remainder_scaled: Fraction
    accounting_bound: Fraction
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [
            f"generator domains < r: {self.generator_sizes_ok}",
            f"slices uncaptureable: {self.slices_ok}",
            f"remainder measure: {format_fraction(self.remainder_measure)} "
            f"(times n^r: {format_fraction(self.remainder_scaled)}, bound {format_fraction(self.accounting_bound)})",
            f"tree shape: depth {self.depth_ok}, children {self.children_ok}, leaves {self.leaves_ok}",
            f"junta complexity: {self.complexity} (<= s^r: {self.complexity_ok})",
        ]
        return out + [f"FAIL {f}" for f in self.failures]


def verify_decomposition(d: Decomposition, r: int | None = None, s: int | None = None) -> DecompositionReport:
    """Re-check every guarantee of a decomposition from scratch."""
    r = d.r if r is None else r
    s = d.s if s is None else s
    F = d.family
    n = F.n
    eps = _threshold(n, r)
    failures: list[str] = []

    sizes_ok = all(len(g) < r for g in d.junta.generators)
    if not sizes_ok:
        failures.append("a generator has domain of size >= r")

    slices_ok = True
    for g, sl in d.slices.items():
        free = min(len(sl.ambient.free_points), len(sl.ambient.free_values))
        rep = check_captureable(sl, min(s, free), eps)
        if rep.verdict:
            slices_ok = False
            failures.append(f"slice {g} is captured by {rep.witness} at {format_fraction(rep.attained)}")
    consistent = set(d.slices) == set(d.junta.generators) and all(
        sl.members == F.restrict(agree=[g]).members for g, sl in d.slices.items()
    )
    if not consistent:
        failures.append("slices do not match the family")

    rest = frozenset(p for p in F.members if not d.junta.contains(p))
    rem_consistent = rest == d.remainder.members
    if not rem_consistent:
        failures.append("remainder does not equal F minus the junta")
    mu = Fraction(len(rest), math.factorial(n))

    tree = d.tree
    depth_ok = tree.depth() <= r and all(v.depth < r for v in tree.good_leaves())
    children_ok = tree.max_children() <= s
    leaves_ok = len(tree.leaves()) <= s**r
    for ok, msg in ((depth_ok, "depth"), (children_ok, "children"), (leaves_ok, "leaf count")):
        if not ok:
            failures.append(f"tree {msg} bound violated")
    bad_ok = all(v.depth == r for v in tree.bad_leaves())
    if not bad_ok:
        failures.append("a bad leaf is not at depth r")

    # every remainder point lies in a bad-leaf star or in some F(σ', π̄_σ') of small measure
    internal = tree.internal_nodes()
    cover_ok = True
    for v in internal:
        if v.capture is None:
            cover_ok = False
            failures.append(f"internal node {v.label} has no capturing bijection")
            continue
        mu_v = measure_avoiding(F.restrict(agree=[v.label]), v.capture)
        if mu_v > eps:
            cover_ok = False
            failures.append(f"node {v.label}: capture measure {format_fraction(mu_v)} exceeds n^-r")
    bad_labels = [v.label for v in tree.bad_leaves()]
    for p in rest:
        if any(lab.agrees_with(p) for lab in bad_labels):
            continue
        if not any(v.label.agrees_with(p) and v.capture is not None and v.capture.disagrees_with(p) for v in internal):
            cover_ok = False
            failures.append(f"remainder point {[x + 1 for x in p]} is not covered")
            break

    star = Fraction(math.factorial(n - r), math.factorial(n))
    bound = len(bad_labels) * star + len(internal) * eps
    remainder_ok = mu <= bound
    if not remainder_ok:
        failures.append(f"remainder {format_fraction(mu)} exceeds accounting bound {format_fraction(bound)}")

    complexity = d.junta.complexity
    complexity_ok = complexity <= s**r
    if not complexity_ok:
        failures.append(f"junta complexity {complexity} exceeds s^r = {s**r}")
    return DecompositionReport(
        sizes_ok,
        remainder_ok,
        slices_ok,
        consistent,
        rem_consistent,
        depth_ok,
        children_ok,
        leaves_ok,
        cover_ok,
        complexity,
        complexity_ok,
        mu,
        mu * n**r,
        bound,
        tuple(failures),
    )


def t_intersecting_junta_check(J: Junta, t: int) -> bool:
    """Every generator has ≥ t points and every two generators agree on ≥ t points."""
    gens = J.generators
    if any(len(g) < t for g in gens):
        return False
    return all(len(a.intersection(b)) >= t for i, a in enumerate(gens) for b in gens[i + 1 :])

"""Matching surgery on pairs of constrained families.

A pair F1 ⊆ S_n(ρ1, τ̄1), F2 ⊆ S_n(ρ2, τ̄2) is encoded by four partial
matchings from X to Y (two tagged copies of [n]): M_i = ρ_i and N_i = τ_i.
Edges of M_i that lie in M_{3-i} ∪ N_{3-i} are type 1; the remaining edges
form paths and cycles, which are eliminated by translating one family by a
cyclic permutation and deleting the points on which both families are then
forced to agree.

Every elimination is an instance of one move, applied to each family:

    σ  ↦  L ∘ σ ∘ R   (after optionally forbidding some extra pairs),

followed by deleting points of X and Y that are matched identically in both
families and relabelling the survivors order-preservingly onto [n'].
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from permjunta.errors import ContractError, InvariantViolation
from permjunta.exact import format_fraction
from permjunta.gates import GateLog
from permjunta.perm import (
    EMPTY,
    PartialBijection,
    PermFamily,
    Permutation,
    RestrictionClass,
    compose,
    identity,
    inverse,
    pairwise_agreement_counts,
    to_one_based,
)
from permjunta.pseudorandom import check_quasiregular
from permjunta.spectral import FunctionOnSn

CYCLE, EVEN_PATH, ODD_PATHS = "cycle", "even-path", "odd-paths-batch"

Vertex = tuple[str, int]  # ("x", i) or ("y", j)
Edge = tuple[int, int, int]  # (owner, x, y), owner in {1, 2}


# ---------------------------------------------------------------------------
# matchings and the good properties


@dataclass(frozen=True)
class MatchingQuadruple:
    n: int
    M1: PartialBijection
    M2: PartialBijection
    N1: PartialBijection = EMPTY
    N2: PartialBijection = EMPTY

    @classmethod
    def from_families(cls, F1: PermFamily, F2: PermFamily) -> "MatchingQuadruple":
        if F1.n != F2.n:
            raise ContractError("the two families live on different ground sets")
        return cls(F1.n, F1.ambient.fixed, F2.ambient.fixed, _forbidden_bijection(F1), _forbidden_bijection(F2))

    def M(self, i: int) -> PartialBijection:
        return self.M1 if i == 1 else self.M2

    def N(self, i: int) -> PartialBijection:
        return self.N1 if i == 1 else self.N2

    def ambient(self, i: int) -> RestrictionClass:
        rho, tau = self.M(i), self.N(i)
        return RestrictionClass(self.n, (rho,) if rho else (), (tau,) if tau else ())

    def agreement(self) -> PartialBijection:
        return self.M1.intersection(self.M2)

    def constraint_size(self) -> int:
        return max(len(self.M1) + len(self.N1), len(self.M2) + len(self.N2))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "M1": self.M1.to_json(),
            "M2": self.M2.to_json(),
            "N1": self.N1.to_json(),
            "N2": self.N2.to_json(),
        }


def _forbidden_bijection(F: PermFamily) -> PartialBijection:
    try:
        return PartialBijection(tuple(sorted(F.ambient.forbidden)))
    except Exception as exc:
        raise ContractError(f"forbidden pairs of {F.ambient} do not form a partial bijection") from exc


def _vx(x: int) -> str:
    return f"x{x + 1}"


def _vy(y: int) -> str:
    return f"y{y + 1}"


@dataclass(frozen=True)
class GoodPropertiesReport:
    ok: bool
    failures: tuple[str, ...]
    witness: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _edge_type(q: MatchingQuadruple, owner: int, x: int, y: int) -> int:
    """1, 2, or 0 when the edge is neither."""
    other, other_n = q.M(3 - owner), q.N(3 - owner)
    if (x, y) in other or (x, y) in other_n:
        return 1
    if x in other.mapping or y in other.range:
        return 2
    return 0


def validate_good_properties(q: MatchingQuadruple) -> GoodPropertiesReport:
    failures: list[str] = []
    witness = None
    for i in (1, 2):
        M, N = q.M(i), q.N(i)
        for x in sorted(set(M.domain) & set(N.domain)):
            failures.append(f"M{i} and N{i} share vertex {_vx(x)}")
            witness = witness or _vx(x)
        for y in sorted(M.range & N.range):
            failures.append(f"M{i} and N{i} share vertex {_vy(y)}")
            witness = witness or _vy(y)
        for x, y in q.N(i):
            if (x, y) not in q.M(3 - i):
                failures.append(f"edge {_vx(x)}{_vy(y)} of N{i} is not an edge of M{3 - i}")
                witness = witness or _vx(x)
        other_n = q.N(3 - i)
        for x, y in M:
            kind = _edge_type(q, i, x, y)
            if kind == 0:
                failures.append(f"edge {_vx(x)}{_vy(y)} of M{i} is neither type 1 nor type 2")
                witness = witness or _vx(x)
            elif kind == 2 and (x in other_n.mapping or y in other_n.range):
                failures.append(f"type-2 edge {_vx(x)}{_vy(y)} of M{i} touches N{3 - i}")
                witness = witness or _vx(x)
    return GoodPropertiesReport(not failures, tuple(failures), witness)


@dataclass(frozen=True)
class Component:
    """A maximal path or cycle of type-2 edges, listed in walking order."""

    kind: str  # "path" or "cycle"
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    @property
    def length(self) -> int:
        return len(self.edges)

    def signature(self) -> tuple[str, int]:
        return (self.kind, self.length)

    def __str__(self) -> str:
        names = [_vx(v) if s == "x" else _vy(v) for s, v in self.vertices]
        if self.kind == "cycle":
            names.append(names[0])
        return "-".join(names)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "length": self.length,
            "vertices": [f"{s}{v + 1}" for s, v in self.vertices],
            "edges": [[o, x + 1, y + 1] for o, x, y in self.edges],
        }


@dataclass(frozen=True)
class EdgeClassification:
    type1: frozenset[tuple[int, int]]
    cycles: tuple[Component, ...]
    paths: tuple[Component, ...]

    def even_paths(self) -> tuple[Component, ...]:
        return tuple(p for p in self.paths if p.length % 2 == 0)

    def odd_paths(self) -> tuple[Component, ...]:
        return tuple(p for p in self.paths if p.length % 2 == 1)

    def signature(self) -> tuple[int, Counter]:
        return len(self.type1), Counter(c.signature() for c in self.cycles + self.paths)


def _endpoints(e: Edge) -> tuple[Vertex, Vertex]:
    return ("x", e[1]), ("y", e[2])


def classify_edges(q: MatchingQuadruple) -> EdgeClassification:
    type1: set[tuple[int, int]] = set()
    type2: list[Edge] = []
    for i in (1, 2):
        for x, y in q.M(i):
            kind = _edge_type(q, i, x, y)
            if kind == 1:
                type1.add((x, y))
            elif kind == 2:
                type2.append((i, x, y))
    incident: dict[Vertex, list[Edge]] = {}
    for e in type2:
        for v in _endpoints(e):
            incident.setdefault(v, []).append(e)

    def walk(start: Vertex, first: Edge) -> tuple[list[Vertex], list[Edge]]:
        verts, edges = [start], [first]
        v, e = start, first
        while True:
            a, b = _endpoints(e)
            v = b if v == a else a
            nxt = [f for f in incident[v] if f != e]
            if not nxt or nxt[0] == first:
                if nxt:
                    return verts, edges
                verts.append(v)
                return verts, edges
            verts.append(v)
            e = nxt[0]
            edges.append(e)

    seen: set[Edge] = set()
    cycles, paths = [], []
    ends = sorted(v for v, es in incident.items() if len(es) == 1)
    for v in ends:
        e = incident[v][0]
        if e in seen:
            continue
        verts, edges = walk(v, e)
        seen.update(edges)
        paths.append(Component("path", tuple(verts), tuple(edges)))
    for v in sorted(incident):
        for e in incident[v]:
            if e in seen:
                continue
            verts, edges = walk(v, e)
            seen.update(edges)
            cycles.append(Component("cycle", tuple(verts), tuple(edges)))
    return EdgeClassification(frozenset(type1), tuple(cycles), tuple(paths))


# ---------------------------------------------------------------------------
# the move: translate, then delete and relabel


@dataclass(frozen=True)
class Move:
    left: Permutation  # acts on Y
    right: Permutation  # acts on X
    extra: PartialBijection = EMPTY  # forbidden before translating

    def to_json(self) -> dict:
        return {
            "left": to_one_based(self.left),
            "right": to_one_based(self.right),
            "extra": self.extra.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Move":
        return cls(
            tuple(v - 1 for v in data["left"]),
            tuple(v - 1 for v in data["right"]),
            PartialBijection.from_one_based(data["extra"]),
        )


def _translate_bijection(pb: PartialBijection, move: Move) -> PartialBijection:
    rinv = inverse(move.right)
    return PartialBijection(tuple((rinv[x], move.left[y]) for x, y in pb))


@dataclass(frozen=True)
class Relabelling:
    n: int
    drop_x: tuple[int, ...]
    drop_y: tuple[int, ...]

    @property
    def keep_x(self) -> tuple[int, ...]:
        gone = set(self.drop_x)
        return tuple(x for x in range(self.n) if x not in gone)

    @property
    def keep_y(self) -> tuple[int, ...]:
        gone = set(self.drop_y)
        return tuple(y for y in range(self.n) if y not in gone)

    @property
    def n_after(self) -> int:
        return self.n - len(self.drop_x)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "drop_x": [x + 1 for x in self.drop_x],
            "drop_y": [y + 1 for y in self.drop_y],
            "keep_x": [x + 1 for x in self.keep_x],
            "keep_y": [y + 1 for y in self.keep_y],
        }


def apply_move(
    F: PermFamily, move: Move, relabel: Relabelling
) -> tuple[PermFamily, PartialBijection, PartialBijection, dict[int, int]]:
    """Apply one move to a family over S_n(ρ, τ̄); returns (F', ρ', τ', forced images)."""
    n = F.n
    rho = F.ambient.fixed
    tau = _forbidden_bijection(F)
    if move.extra:
        for x, y in move.extra:
            if x in rho.mapping or y in rho.range:
                raise ContractError(f"extra forbidden pair {x + 1}->{y + 1} touches a fixed point")
        G = F.restrict(disagree=[move.extra])
        tau = tau.union(move.extra) if tau.conflict(move.extra) is None else None
        if tau is None:
            raise ContractError("extra forbidden pairs clash with the existing ones")
    else:
        G = F
    rho_t = _translate_bijection(rho, move)
    tau_t = _translate_bijection(tau, move)
    drop_x, drop_y = set(relabel.drop_x), set(relabel.drop_y)
    forced = {x: rho_t.mapping.get(x) for x in relabel.drop_x}
    if any(v is None for v in forced.values()) or set(forced.values()) != drop_y:
        raise InvariantViolation("deleted points are not matched onto the deleted values")
    ix = {x: i for i, x in enumerate(relabel.keep_x)}
    iy = {y: i for i, y in enumerate(relabel.keep_y)}
    rho_new = PartialBijection(tuple((ix[x], iy[y]) for x, y in rho_t if x not in drop_x))
    tau_pairs = []
    for x, y in tau_t:
        if x in drop_x:
            if forced[x] == y:
                raise InvariantViolation(f"forbidden pair {x + 1}->{y + 1} is forced")
            continue
        if y in drop_y:
            continue
        tau_pairs.append((ix[x], iy[y]))
    tau_new = PartialBijection(tuple(tau_pairs))
    n2 = relabel.n_after
    amb = RestrictionClass(n2, (rho_new,) if rho_new else (), (tau_new,) if tau_new else ())
    members = []
    for m in G.members:
        t = compose(move.left, compose(m, move.right))
        members.append(tuple(iy[t[x]] for x in relabel.keep_x))
    if len(set(members)) != len(members):
        raise InvariantViolation("relabelling is not injective on the family")
    return PermFamily(amb, frozenset(members)), rho_new, tau_new, {x: int(y) for x, y in forced.items()}


def lift_permutation(
    sigma: Sequence[int], move: Move, relabel: Relabelling, forced: dict[int, int]
) -> Permutation:
    """Pull a permutation of [n'] back through relabelling and translation."""
    ext = [0] * relabel.n
    keep_y = relabel.keep_y
    for i, x in enumerate(relabel.keep_x):
        ext[x] = keep_y[sigma[i]]
    for x, y in forced.items():
        ext[x] = y
    return compose(inverse(move.left), compose(tuple(ext), inverse(move.right)))


# ---------------------------------------------------------------------------
# surgery steps


@dataclass
class SurgeryStep:
    kind: str
    thetas: tuple[Permutation, ...]
    moves: tuple[Move, Move]
    relabel: Relabelling
    forced: tuple[dict[int, int], dict[int, int]]
    before: MatchingQuadruple
    after: MatchingQuadruple
    measures_before: tuple[Fraction, Fraction]
    measures_after: tuple[Fraction, Fraction]
    checks: dict[str, bool] = field(default_factory=dict)
    gates: GateLog = field(default_factory=GateLog)
    planted_pairs: int = 0

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def lift(self, sigma1: Sequence[int], sigma2: Sequence[int]) -> tuple[Permutation, Permutation]:
        return (
            lift_permutation(sigma1, self.moves[0], self.relabel, self.forced[0]),
            lift_permutation(sigma2, self.moves[1], self.relabel, self.forced[1]),
        )

    def lines(self) -> list[str]:
        head = f"{self.kind}: n {self.relabel.n} -> {self.relabel.n_after}"
        out = [head] + ["  " + g for g in self.gates.lines()]
        out += [f"  check {name}: {'pass' if ok else 'FAIL'}" for name, ok in self.checks.items()]
        out.append(f"  lifting verified on {self.planted_pairs} planted pairs")
        return out

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "thetas": [to_one_based(t) for t in self.thetas],
            "moves": [m.to_json() for m in self.moves],
            "relabel": self.relabel.to_json(),
            "before": self.before.to_json(),
            "after": self.after.to_json(),
            "measures_before": [format_fraction(m) for m in self.measures_before],
            "measures_after": [format_fraction(m) for m in self.measures_after],
            "checks": dict(self.checks),
            "gates": [g.to_json() for g in self.gates.gates],
            "planted_pairs": self.planted_pairs,
        }


def replay_step(data: dict, F1: PermFamily, F2: PermFamily) -> tuple[PermFamily, PermFamily]:
    """Re-apply a serialized step to the same input pair."""
    rel = data["relabel"]
    relabel = Relabelling(rel["n"], tuple(x - 1 for x in rel["drop_x"]), tuple(y - 1 for y in rel["drop_y"]))
    m1, m2 = (Move.from_json(m) for m in data["moves"])
    return apply_move(F1, m1, relabel)[0], apply_move(F2, m2, relabel)[0]


def _max_ratio(F: PermFamily, s: int) -> Fraction:
    amb = F.ambient
    size = min(s, len(amb.free_points), len(amb.free_values))
    return check_quasiregular(F, size, 1).attained


def _prepare(F1: PermFamily, F2: PermFamily, q: MatchingQuadruple, t: int | None) -> None:
    if MatchingQuadruple.from_families(F1, F2) != q:
        raise ContractError("the quadruple does not describe the two ambients")
    rep = validate_good_properties(q)
    if not rep.ok:
        raise ContractError("good properties fail: " + "; ".join(rep.failures))
    if not F1.members or not F2.members:
        raise ContractError("both families must be non-empty")
    if t is not None and len(q.agreement()) != t - 1:
        raise ContractError(f"rho1 and rho2 agree in {len(q.agreement())} places, expected t-1 = {t - 1}")


def _lifting_check(
    step: SurgeryStep, F1: PermFamily, F2: PermFamily, G1: PermFamily, G2: PermFamily
) -> tuple[bool, int]:
    """Plant every downstream ambient pair agreeing only on the designated points and pull it back."""
    c_new, c_old = len(step.after.agreement()), len(step.before.agreement())
    ok = c_new == c_old
    A1 = list(step.after.ambient(1).members())
    A2 = list(step.after.ambient(2).members())
    L1 = [lift_permutation(s, step.moves[0], step.relabel, step.forced[0]) for s in A1]
    L2 = [lift_permutation(s, step.moves[1], step.relabel, step.forced[1]) for s in A2]
    amb1, amb2 = step.before.ambient(1), step.before.ambient(2)
    ok &= all(amb1.contains(p) for p in L1) and all(amb2.contains(p) for p in L2)
    # members correspond to members
    ok &= {lift_permutation(s, step.moves[0], step.relabel, step.forced[0]) for s in G1.members} <= F1.members
    ok &= {lift_permutation(s, step.moves[1], step.relabel, step.forced[1]) for s in G2.members} <= F2.members
    if not A1 or not A2:
        return ok, 0
    planted = 0
    new1, new2 = np.array(A1, dtype=np.int64), np.array(A2, dtype=np.int64)
    old1, old2 = np.array(L1, dtype=np.int64), np.array(L2, dtype=np.int64)
    chunk = 512
    for cn, co in zip(pairwise_agreement_counts(new1, new2, chunk), pairwise_agreement_counts(old1, old2, chunk)):
        mask = cn == c_new
        planted += int(mask.sum())
        if np.any(co[mask] != c_old):
            ok = False
    return bool(ok), planted


def _finish_step(
    step: SurgeryStep,
    F1: PermFamily,
    F2: PermFamily,
    G1: PermFamily,
    G2: PermFamily,
    expected: tuple[int, Counter],
    rho_loss: int,
    tau_growth: tuple[int, int],
    s: int,
    ratio_ok,
) -> SurgeryStep:
    q, q2 = step.before, step.after
    c = step.checks
    c["n reduced"] = q2.n == q.n - rho_loss
    c["rho sizes"] = all(len(q2.M(i)) == len(q.M(i)) - rho_loss for i in (1, 2))
    c["tau sizes"] = all(len(q2.N(i)) == len(q.N(i)) + tau_growth[i - 1] for i in (1, 2))
    c["rho/tau disjoint"] = all(
        not (set(q2.M(i).domain) & set(q2.N(i).domain)) and not (q2.M(i).range & q2.N(i).range) for i in (1, 2)
    )
    c["agreement count"] = len(q2.agreement()) == len(q.agreement())
    before = (_max_ratio(F1, s), _max_ratio(F2, s))
    after = (_max_ratio(G1, s), _max_ratio(G2, s))
    c["quasiregularity"] = ratio_ok(before, after)
    c["good properties"] = validate_good_properties(q2).ok
    c["graph change"] = classify_edges(q2).signature() == expected
    lift_ok, planted = _lifting_check(step, F1, F2, G1, G2)
    c["lifting"] = lift_ok
    step.planted_pairs = planted
    if not step.ok:
        failed = [k for k, v in c.items() if not v]
        if step.gates.all_satisfied:
            raise InvariantViolation(f"{step.kind} post-conditions failed: {', '.join(failed)}")
    return step


def _expected_signature(cls: EdgeClassification, removed: Iterable[Component], new_type1: int) -> tuple[int, Counter]:
    ntype1, sig = cls.signature()
    sig = sig.copy()
    for comp in removed:
        sig[comp.signature()] -= 1
    return ntype1 + new_type1, +sig


def _cycle_perm(n: int, points: Sequence[int]) -> Permutation:
    """The cycle points[0] -> points[1] -> ... -> points[0]."""
    img = list(range(n))
    for a, b in zip(points, points[1:] + tuple(points[:1])):
        img[a] = b
    return tuple(img)


def _find(cls: EdgeClassification, comp: Component | None, pool: tuple[Component, ...], what: str) -> Component:
    if comp is None or comp not in pool:
        raise ContractError(f"no such {what} among the type-2 components; run classify_edges first")
    return comp


def eliminate_cycle(
    F1: PermFamily,
    F2: PermFamily,
    q: MatchingQuadruple,
    cycle: Component | None,
    s: int = 1,
    eta: Fraction | None = None,
    t: int | None = None,
    premise: bool = True,
) -> tuple[PermFamily, PermFamily, MatchingQuadruple, SurgeryStep]:
    """Left-translate F2 so both families match the cycle identically, then delete it."""
    _prepare(F1, F2, q, t)
    cls = classify_edges(q)
    cycle = _find(cls, cycle, cls.cycles, "cycle")
    if premise:
        _premise(F1, F2, s, eta)
    n = q.n
    xs = tuple(sorted(v for side, v in cycle.vertices if side == "x"))
    ys = tuple(sorted(v for side, v in cycle.vertices if side == "y"))
    # θ(y) = ρ1(ρ2⁻¹(y)) on the cycle, identity elsewhere
    inv2 = {y: x for x, y in q.M2}
    theta = list(range(n))
    for y in ys:
        theta[y] = q.M1.mapping[inv2[y]]
    theta_p = tuple(theta)
    m1, m2 = Move(identity(n), identity(n)), Move(theta_p, identity(n))
    relabel = Relabelling(n, xs, ys)
    G1, r1, t1, f1 = apply_move(F1, m1, relabel)
    G2, r2, t2, f2 = apply_move(F2, m2, relabel)
    q2 = MatchingQuadruple(relabel.n_after, r1, r2, t1, t2)
    step = SurgeryStep(
        CYCLE, (theta_p,), (m1, m2), relabel, (f1, f2), q, q2,
        (F1.measure(), F2.measure()), (G1.measure(), G2.measure()),
    )
    step.checks["measures equal"] = step.measures_before == step.measures_after
    _finish_step(
        step, F1, F2, G1, G2, _expected_signature(cls, [cycle], 0), len(xs), (0, 0), s,
        lambda b, a: a == b and _within(a, eta),
    )
    return G1, G2, q2, step


def _within(ratios: tuple[Fraction, Fraction], eta: Fraction | None, factor: int = 1) -> bool:
    return eta is None or all(r <= 1 + factor * Fraction(eta) for r in ratios)


def _premise(F1: PermFamily, F2: PermFamily, s: int, eta: Fraction | None) -> None:
    if eta is None:
        return
    for i, F in ((1, F1), (2, F2)):
        ratio = _max_ratio(F, s)
        if ratio > 1 + Fraction(eta):
            raise ContractError(
                f"F{i} is not ({s}, 1+{format_fraction(Fraction(eta))})-quasiregular: ratio {format_fraction(ratio)}"
            )


def eliminate_even_path(
    F1: PermFamily,
    F2: PermFamily,
    q: MatchingQuadruple,
    path: Component | None,
    s: int = 1,
    eta: Fraction | None = None,
    t: int | None = None,
    premise: bool = True,
) -> tuple[PermFamily, PermFamily, MatchingQuadruple, SurgeryStep]:
    """Translate F2 along an even path (right for X-ended, left for Y-ended), then delete it."""
    _prepare(F1, F2, q, t)
    cls = classify_edges(q)
    if path is not None and path in cls.odd_paths():
        raise ContractError("odd-length path passed to eliminate_even_path")
    path = _find(cls, path, cls.even_paths(), "even path")
    if premise:
        _premise(F1, F2, s, eta)
    n = q.n
    verts, edges = list(path.vertices), list(path.edges)
    if edges[0][0] != 1:  # start at the end covered by M1
        verts.reverse()
        edges.reverse()
    xs = [v for side, v in verts if side == "x"]
    ys = [v for side, v in verts if side == "y"]
    if verts[0][0] == "x":
        # x1 y1 x2 ... yk x_{k+1}: θ = (x1 x2 ... x_{k+1}) composed on the right
        theta = _cycle_perm(n, tuple(xs))
        m2 = Move(identity(n), theta)
        drop_x, drop_y = xs[:-1], ys
    else:
        # y1 x1 y2 ... xk y_{k+1}: φ(y_{j+1}) = y_j, φ(y1) = y_{k+1}, composed on the left
        theta = _cycle_perm(n, tuple(reversed(ys)))
        m2 = Move(theta, identity(n))
        drop_x, drop_y = xs, ys[:-1]
    m1 = Move(identity(n), identity(n))
    relabel = Relabelling(n, tuple(sorted(drop_x)), tuple(sorted(drop_y)))
    G1, r1, t1, f1 = apply_move(F1, m1, relabel)
    G2, r2, t2, f2 = apply_move(F2, m2, relabel)
    q2 = MatchingQuadruple(relabel.n_after, r1, r2, t1, t2)
    step = SurgeryStep(
        EVEN_PATH, (theta,), (m1, m2), relabel, (f1, f2), q, q2,
        (F1.measure(), F2.measure()), (G1.measure(), G2.measure()),
    )
    step.checks["measures equal"] = step.measures_before == step.measures_after
    _finish_step(
        step, F1, F2, G1, G2, _expected_signature(cls, [path], 0), len(drop_x), (0, 0), s,
        lambda b, a: a == b and _within(a, eta),
    )
    return G1, G2, q2, step


def odd_path_gate(n: int, b: int, Q: int, eta: Fraction) -> bool:
    """n ≥ b + max{Q², 16/η²}."""
    eta = Fraction(eta)
    return n >= b + max(Q * Q, 16 / (eta * eta))


def eliminate_odd_paths(
    F1: PermFamily,
    F2: PermFamily,
    q: MatchingQuadruple,
    s: int = 1,
    eta: Fraction = Fraction(1),
    t: int | None = None,
    enforce: bool = True,
    premise: bool = True,
) -> tuple[PermFamily, PermFamily, MatchingQuadruple, SurgeryStep]:
    """Replace every odd path of type-2 edges by a single type-1 edge, all at once."""
    _prepare(F1, F2, q, t)
    eta = Fraction(eta)
    if not 0 < eta <= 1:
        raise ContractError("eta must lie in (0, 1]")
    cls = classify_edges(q)
    odd = cls.odd_paths()
    n = q.n
    gates = GateLog(enforce)
    b = max(len(q.M(i)) + len(q.N(i)) for i in (1, 2))
    Q = len(odd)
    gates.require(
        "odd-path size",
        odd_path_gate(n, b, Q, eta),
        f"n = {n} >= b + max(Q^2, 16/eta^2) = {b} + max({Q * Q}, {format_fraction(16 / (eta * eta))})",
    )
    if premise:
        _premise(F1, F2, s, eta)
    rights = {1: list(range(n)), 2: list(range(n))}
    extras: dict[int, list[tuple[int, int]]] = {1: [], 2: []}
    thetas = []
    drop_x: list[int] = []
    drop_y: list[int] = []
    for comp in odd:
        verts, edges = list(comp.vertices), list(comp.edges)
        if verts[0][0] != "x":
            verts.reverse()
            edges.reverse()
        xs = [v for side, v in verts if side == "x"]
        ys = [v for side, v in verts if side == "y"]
        owner = edges[0][0]  # the path starts and ends with an edge of M_owner
        other = 3 - owner
        theta = _cycle_perm(n, tuple(xs))
        thetas.append(theta)
        # the cycles are disjoint, so composing in path order is only for determinism
        rights[other] = list(compose(tuple(rights[other]), theta))
        extras[other].append((xs[0], ys[-1]))
        drop_x += xs[:-1]
        drop_y += ys[:-1]
    m1 = Move(identity(n), tuple(rights[1]), PartialBijection(tuple(extras[1])))
    m2 = Move(identity(n), tuple(rights[2]), PartialBijection(tuple(extras[2])))
    relabel = Relabelling(n, tuple(sorted(drop_x)), tuple(sorted(drop_y)))
    G1, r1, t1, f1 = apply_move(F1, m1, relabel)
    G2, r2, t2, f2 = apply_move(F2, m2, relabel)
    q2 = MatchingQuadruple(relabel.n_after, r1, r2, t1, t2)
    step = SurgeryStep(
        ODD_PATHS, tuple(thetas), (m1, m2), relabel, (f1, f2), q, q2,
        (F1.measure(), F2.measure()), (G1.measure(), G2.measure()), gates=gates,
    )
    step.checks["measure retention"] = all(
        a >= b_ / 2 for a, b_ in zip(step.measures_after, step.measures_before)
    )
    if not G1.members or not G2.members:
        step.checks["non-empty"] = False
    growth = (len(extras[1]), len(extras[2]))
    _finish_step(
        step, F1, F2, G1, G2, _expected_signature(cls, odd, Q), len(drop_x), growth, s,
        lambda b_, a: _within(a, eta, 3),
    )
    return G1, G2, q2, step


@dataclass
class SurgeryRun:
    steps: list[SurgeryStep]
    F1: PermFamily
    F2: PermFamily
    q: MatchingQuadruple

    @property
    def ok(self) -> bool:
        return all(st.ok for st in self.steps)

    def lift(self, sigma1: Sequence[int], sigma2: Sequence[int]) -> tuple[Permutation, Permutation]:
        a, b = tuple(sigma1), tuple(sigma2)
        for st in reversed(self.steps):
            a, b = st.lift(a, b)
        return a, b

    def lines(self) -> list[str]:
        return [line for st in self.steps for line in st.lines()]

    def to_json(self) -> dict:
        return {"steps": [st.to_json() for st in self.steps], "final": self.q.to_json()}


def run_surgery(
    F1: PermFamily,
    F2: PermFamily,
    s: int = 1,
    eta: Fraction | None = None,
    t: int | None = None,
    enforce: bool = True,
    premise: bool = True,
) -> SurgeryRun:
    """Cycles one by one, then even paths one by one, then all odd paths at once."""
    q = MatchingQuadruple.from_families(F1, F2)
    steps = []
    # without the premise only exact preservation of the ratios is asserted
    exact_eta = eta if premise else None
    while True:
        cls = classify_edges(q)
        if cls.cycles:
            F1, F2, q, st = eliminate_cycle(F1, F2, q, cls.cycles[0], s, exact_eta, t, premise)
        elif cls.even_paths():
            F1, F2, q, st = eliminate_even_path(F1, F2, q, cls.even_paths()[0], s, exact_eta, t, premise)
        else:
            break
        steps.append(st)
    if classify_edges(q).odd_paths():
        F1, F2, q, st = eliminate_odd_paths(
            F1, F2, q, s, eta if eta is not None else Fraction(1), t, enforce, premise
        )
        steps.append(st)
    return SurgeryRun(steps, F1, F2, q)


# ---------------------------------------------------------------------------
# preprocessing


def unique_pairs(pi: PartialBijection, other: PartialBijection) -> PartialBijection:
    """Pairs x ↦ y of pi with x outside the other's domain and y outside its range."""
    dom = set(other.domain)
    return PartialBijection(tuple((x, y) for x, y in pi if x not in dom and y not in other.range))


def preprocess_unique_pairs(
    pi1: PartialBijection, pi2: PartialBijection
) -> tuple[PartialBijection, PartialBijection]:
    """(σ1, σ2): σ1 forbids the π2-unique pairs in the first family, σ2 the π1-unique pairs in the second."""
    return unique_pairs(pi2, pi1), unique_pairs(pi1, pi2)


# ---------------------------------------------------------------------------
# fixing operators and fractional quotients


def _check_disjoint(pi1: PartialBijection, pi2: PartialBijection) -> None:
    if set(pi1.domain) & set(pi2.domain) or pi1.range & pi2.range:
        raise ContractError("pi1 and pi2 must have disjoint domains and disjoint ranges")


def _swap_step(sigma: Permutation, i: int, j: int) -> Permutation:
    a = sigma[i]
    return tuple(a if v == j else j if v == a else v for v in sigma)


def fixing_operator(
    pi1: PartialBijection, pi2: PartialBijection, sigma: Sequence[int], check: bool = True
) -> Permutation:
    """Compose the value swaps (j_k σ(i_k)) in ascending i_k, sending S_n(π1, π̄2) into S_n(π1, π2)."""
    _check_disjoint(pi1, pi2)
    sigma = tuple(sigma)
    amb = RestrictionClass(len(sigma), (pi1,) if pi1 else (), (pi2,) if pi2 else ())
    if not amb.contains(sigma):
        raise ContractError(f"{to_one_based(sigma)} is not in {amb}")
    out = sigma
    for i, j in pi2:
        out = _swap_step(out, i, j)
    if check:
        pairs = list(pi2)
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                ab = _swap_step(_swap_step(sigma, *pairs[a]), *pairs[b])
                ba = _swap_step(_swap_step(sigma, *pairs[b]), *pairs[a])
                if ab != ba:
                    raise InvariantViolation(f"swaps for {pairs[a]} and {pairs[b]} do not commute")
        if not (pi1.agrees_with(out) and pi2.agrees_with(out)):
            raise InvariantViolation("fixing operator left the target class")
    return out


def fixing_fibers(
    n: int, pi1: PartialBijection, pi2: PartialBijection
) -> dict[Permutation, list[Permutation]]:
    """Preimages of every τ ∈ S_n(π1, π2); asserts surjectivity and constant fiber size."""
    _check_disjoint(pi1, pi2)
    source = RestrictionClass(n, (pi1,) if pi1 else (), (pi2,) if pi2 else ())
    target = RestrictionClass(n, (pi1.union(pi2),) if (pi1 or pi2) else ())
    fibers: dict[Permutation, list[Permutation]] = {tau: [] for tau in target.members()}
    for sigma in source.members():
        tau = fixing_operator(pi1, pi2, sigma, check=False)
        if tau not in fibers:
            raise InvariantViolation("fixing operator left the target class")
        fibers[tau].append(sigma)
    sizes = {len(v) for v in fibers.values()}
    if len(sizes) != 1 or 0 in sizes:
        raise InvariantViolation(f"fiber sizes are not constant: {sorted(sizes)}")
    return fibers


def _split_class(F: PermFamily) -> tuple[PartialBijection, PartialBijection]:
    return F.ambient.fixed, _forbidden_bijection(F)


def quotient_fraction(
    F: PermFamily, pi1: PartialBijection | None = None, pi2: PartialBijection | None = None
) -> FunctionOnSn:
    """f̃(τ) = |S⁻¹(τ) ∩ F| / |S⁻¹(τ)| on S_n(π1, π2)."""
    base1, base2 = _split_class(F)
    pi1 = base1 if pi1 is None else pi1
    pi2 = base2 if pi2 is None else pi2
    if pi1 != base1 or set(pi2) != set(F.ambient.forbidden):
        raise ContractError(f"family ambient {F.ambient} is not S_n({pi1}, not {pi2})")
    fibers = fixing_fibers(F.n, pi1, pi2)
    size = len(next(iter(fibers.values())))
    values = {}
    for tau, pre in fibers.items():
        hit = sum(1 for p in pre if p in F.members)
        if hit:
            values[tau] = Fraction(hit, size)
    target = RestrictionClass(F.n, (pi1.union(pi2),) if (pi1 or pi2) else ())
    f = FunctionOnSn(F.n, values, target)
    if f.mean() != F.measure():
        raise InvariantViolation("E[f~] differs from the measure of F")
    return f


@dataclass(frozen=True)
class TransferReport:
    vanishing: bool
    quasiregular: bool
    alpha: Fraction
    ratios: tuple[Fraction, Fraction]
    checked_pairs: int
    same_order_alpha: Fraction = Fraction(0)

    def __bool__(self) -> bool:
        return self.vanishing and self.quasiregular

    @property
    def same_order(self) -> bool:
        """Whether the quotients also respect the order-s ratio of the families (not guaranteed)."""
        return all(r <= self.same_order_alpha for r in self.ratios)


def _max_function_ratio(f: FunctionOnSn, s: int) -> Fraction:
    amb = f.ambient
    size = min(s, len(amb.free_points), len(amb.free_values))
    return check_quasiregular(f, size, 1).attained


def cross_intersection_transfer_check(
    F: PermFamily, G: PermFamily, s: int = 1
) -> TransferReport:
    """F over S_n(π1, π̄2), G over S_n(π̄1, π2), every F-member meeting every G-member.

    The fiber of a size-s star of the quotient is a union of stars of size up
    to 2s upstairs, so the quotient ratio at size s is bounded by the family
    ratio at size 2s (which dominates every smaller size by averaging).
    """
    pi1, pi2 = _split_class(F)
    g2, g1 = _split_class(G)
    if g1 != pi1 or g2 != pi2:
        raise ContractError("G must live on S_n(not pi1, pi2) for the same pi1, pi2 as F")
    if F.members and G.members:
        for block in pairwise_agreement_counts(F.array.astype(np.int64), G.array.astype(np.int64)):
            if np.any(block == 0):
                raise ContractError("hypothesis fails: some member of F disagrees everywhere with a member of G")
    f = _as_common(quotient_fraction(F, pi1, pi2), pi1, pi2)
    g = _as_common(quotient_fraction(G, pi2, pi1), pi1, pi2)
    designated = len(pi1) + len(pi2)
    checked = 0
    vanishing = True
    if f.support and g.support:
        A = np.array(f.support, dtype=np.int64)
        B = np.array(g.support, dtype=np.int64)
        for block in pairwise_agreement_counts(A, B):
            checked += block.size
            if np.any(block == designated):
                vanishing = False
    quasi = True
    ratios = (Fraction(0), Fraction(0))
    alpha = same = Fraction(0)
    if F.members and G.members:
        alpha = max(_max_ratio(F, 2 * s), _max_ratio(G, 2 * s))
        same = max(_max_ratio(F, s), _max_ratio(G, s))
        ratios = (_max_function_ratio(f, s), _max_function_ratio(g, s))
        quasi = all(r <= alpha for r in ratios)
    return TransferReport(vanishing, quasi, alpha, ratios, checked, same)


def _as_common(f: FunctionOnSn, pi1: PartialBijection, pi2: PartialBijection) -> FunctionOnSn:
    both = pi1.union(pi2)
    return FunctionOnSn(f.n, f.values, RestrictionClass(f.n, (both,) if both else ()))


def fiber_pair(
    F: PermFamily,
    G: PermFamily,
    sigma1: Sequence[int],
    sigma2: Sequence[int],
) -> tuple[Permutation, Permutation]:
    """Members of F and G above σ1 and σ2; they disagree everywhere when σ1, σ2 meet only on the fixed points."""
    pi1, pi2 = _split_class(F)
    a = next((p for p in fixing_fibers(F.n, pi1, pi2)[tuple(sigma1)] if p in F.members), None)
    b = next((p for p in fixing_fibers(G.n, pi2, pi1)[tuple(sigma2)] if p in G.members), None)
    if a is None or b is None:
        raise ContractError("one of the fibers misses its family")
    if any(u == v for u, v in zip(a, b)):
        raise InvariantViolation(f"fiber members {to_one_based(a)} and {to_one_based(b)} agree somewhere")
    return a, b


def relabel_function(f: FunctionOnSn, pi: PartialBijection) -> tuple[FunctionOnSn, Relabelling]:
    """A function on S_n(π) viewed on S_{n-|π|} by deleting the domain and range of π."""
    if f.ambient.fixed != pi or f.ambient.forbidden:
        raise ContractError("function must live on the class S_n(pi)")
    rel = Relabelling(f.n, pi.domain, tuple(sorted(pi.range)))
    iy = {y: i for i, y in enumerate(rel.keep_y)}
    values = {tuple(iy[p[x]] for x in rel.keep_x): v for p, v in f.values.items()}
    return FunctionOnSn(rel.n_after, values, None, f.bounded), rel


def unrelabel(sigma: Sequence[int], pi: PartialBijection, rel: Relabelling) -> Permutation:
    """Inverse of relabel_function on a single permutation: re-insert π."""
    return lift_permutation(sigma, Move(identity(rel.n), identity(rel.n)), rel, dict(pi.pairs))


__all__ = [
    "CYCLE",
    "EVEN_PATH",
    "ODD_PATHS",
    "Component",
    "EdgeClassification",
    "GoodPropertiesReport",
    "MatchingQuadruple",
    "Move",
    "Relabelling",
    "SurgeryRun",
    "SurgeryStep",
    "TransferReport",
    "apply_move",
    "classify_edges",
    "cross_intersection_transfer_check",
    "eliminate_cycle",
    "eliminate_even_path",
    "eliminate_odd_paths",
    "fiber_pair",
    "fixing_fibers",
    "fixing_operator",
    "lift_permutation",
    "odd_path_gate",
    "preprocess_unique_pairs",
    "quotient_fraction",
    "relabel_function",
    "replay_step",
    "run_surgery",
    "unique_pairs",
    "unrelabel",
    "validate_good_properties",
]

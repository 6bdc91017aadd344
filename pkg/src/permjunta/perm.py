"""Permutations, partial bijections, restriction classes, families and juntas.

Permutations are plain tuples of 0-based images; ``sigma[i]`` is the image of
point ``i``.  Every public printer and parser works 1-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache, cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from permjunta.errors import ConflictError, InfeasibleClassError, SizeMismatchError

Permutation = tuple[int, ...]


# ---------------------------------------------------------------------------
# permutations


def permutation(images: Sequence[int], one_based: bool = True) -> Permutation:
    """Validate and normalise an image array."""
    offset = 1 if one_based else 0
    perm = tuple(int(v) - offset for v in images)
    n = len(perm)
    if n < 1 or sorted(perm) != list(range(n)):
        shown = [v + 1 for v in perm]
        raise ValueError(f"{shown} is not a permutation of [{n}]")
    return perm


def identity(n: int) -> Permutation:
    return tuple(range(n))


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return ``a ∘ b`` (apply b first)."""
    return tuple(a[i] for i in b)


def inverse(a: Permutation) -> Permutation:
    inv = [0] * len(a)
    for i, v in enumerate(a):
        inv[v] = i
    return tuple(inv)


def cycles(a: Permutation) -> list[tuple[int, ...]]:
    seen = [False] * len(a)
    out = []
    for start in range(len(a)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = a[i]
        out.append(tuple(cyc))
    return out


def cycle_type(a: Permutation) -> tuple[int, ...]:
    return tuple(sorted((len(c) for c in cycles(a)), reverse=True))


def sign(a: Permutation) -> int:
    return -1 if (len(a) - len(cycles(a))) % 2 else 1


def fixed_points(a: Permutation) -> int:
    return sum(1 for i, v in enumerate(a) if i == v)


def cycle_permutation(n: int, points: Sequence[int]) -> Permutation:
    """The cycle ``(p0 p1 ... pk)`` on [n], 0-based points."""
    img = list(range(n))
    for j, p in enumerate(points):
        img[p] = points[(j + 1) % len(points)]
    return tuple(img)


def to_one_based(a: Sequence[int]) -> list[int]:
    return [v + 1 for v in a]


@cache
def all_permutations(n: int) -> tuple[Permutation, ...]:
    """All of S_n in lexicographic order."""
    return tuple(itertools.permutations(range(n)))


@cache
def permutation_array(n: int) -> np.ndarray:
    return np.array(all_permutations(n), dtype=np.int8).reshape(-1, n)


@cache
def derangements(n: int) -> tuple[Permutation, ...]:
    return tuple(p for p in all_permutations(n) if all(p[i] != i for i in range(n)))


def agreements(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of points where two permutations agree."""
    if len(a) != len(b):
        raise SizeMismatchError(f"permutations of different sizes: {len(a)} vs {len(b)}")
    return sum(1 for x, y in zip(a, b) if x == y)


# ---------------------------------------------------------------------------
# partial bijections


@dataclass(frozen=True, order=False)
class PartialBijection:
    """An injective map between subsets of [n], stored as sorted 0-based pairs."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        pairs = tuple(sorted(set((int(x), int(y)) for x, y in self.pairs)))
        xs = [x for x, _ in pairs]
        ys = [y for _, y in pairs]
        if any(v < 0 for v in xs + ys):
            raise ValueError("points must be non-negative")
        if len(set(xs)) != len(xs):
            dup = next(x for x in xs if xs.count(x) > 1)
            raise ConflictError(f"point {dup + 1} has two images in {_fmt_pairs(pairs)}")
        if len(set(ys)) != len(ys):
            dup = next(y for y in ys if ys.count(y) > 1)
            raise ConflictError(f"point {dup + 1} has two preimages in {_fmt_pairs(pairs)}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_one_based(cls, pairs: Iterable[Sequence[int]]) -> "PartialBijection":
        return cls(tuple((int(x) - 1, int(y) - 1) for x, y in pairs))

    @classmethod
    def from_mapping(cls, mapping: dict[int, int]) -> "PartialBijection":
        return cls(tuple(mapping.items()))

    @classmethod
    def star_of(cls, sigma: Permutation, points: Iterable[int]) -> "PartialBijection":
        return cls(tuple((x, sigma[x]) for x in points))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    @cached_property
    def mapping(self) -> dict[int, int]:
        return dict(self.pairs)

    @cached_property
    def domain(self) -> tuple[int, ...]:
        return tuple(x for x, _ in self.pairs)

    @cached_property
    def images(self) -> tuple[int, ...]:
        return tuple(y for _, y in self.pairs)

    @cached_property
    def range(self) -> frozenset[int]:
        return frozenset(self.images)

    def sort_key(self) -> tuple:
        """Size first, then sorted domain, then images."""
        return (len(self.pairs), self.domain, self.images)

    def __lt__(self, other: "PartialBijection") -> bool:
        return self.sort_key() < other.sort_key()

    def inverse(self) -> "PartialBijection":
        return PartialBijection(tuple((y, x) for x, y in self.pairs))

    def conflict(self, other: "PartialBijection") -> tuple[int, int, int, int] | None:
        """Return one offending pair of pairs, or None if the union is injective."""
        mine = self.mapping
        inv = {y: x for x, y in self.pairs}
        for x, y in other.pairs:
            if x in mine and mine[x] != y:
                return (x, mine[x], x, y)
            if y in inv and inv[y] != x:
                return (inv[y], y, x, y)
        return None

    def union(self, other: "PartialBijection") -> "PartialBijection":
        bad = self.conflict(other)
        if bad is not None:
            x1, y1, x2, y2 = bad
            raise ConflictError(
                f"cannot merge {x1 + 1}->{y1 + 1} with {x2 + 1}->{y2 + 1}"
            )
        return PartialBijection(self.pairs + other.pairs)

    def intersection(self, other: "PartialBijection") -> "PartialBijection":
        theirs = set(other.pairs)
        return PartialBijection(tuple(p for p in self.pairs if p in theirs))

    def without(self, other: "PartialBijection") -> "PartialBijection":
        theirs = set(other.pairs)
        return PartialBijection(tuple(p for p in self.pairs if p not in theirs))

    def agrees_with(self, sigma: Sequence[int]) -> bool:
        return all(sigma[x] == y for x, y in self.pairs)

    def disagrees_with(self, sigma: Sequence[int]) -> bool:
        return all(sigma[x] != y for x, y in self.pairs)

    def max_point(self) -> int:
        return max((max(x, y) for x, y in self.pairs), default=-1)

    def to_json(self) -> list[list[int]]:
        return [[x + 1, y + 1] for x, y in self.pairs]

    def __str__(self) -> str:
        return _fmt_pairs(self.pairs)

    def __repr__(self) -> str:
        return f"PartialBijection({_fmt_pairs(self.pairs)})"


EMPTY = PartialBijection()


def _fmt_pairs(pairs: Iterable[tuple[int, int]]) -> str:
    return "{" + ", ".join(f"{x + 1}->{y + 1}" for x, y in pairs) + "}"


def union_bijections(a: PartialBijection, b: PartialBijection) -> PartialBijection:
    """Set union of two compatible partial bijections."""
    return a.union(b)


def partial_bijections(
    xs: Sequence[int], ys: Sequence[int], size: int
) -> Iterator[PartialBijection]:
    """All bijections between ``size``-subsets of xs and ys, in lexicographic order."""
    xs, ys = sorted(xs), sorted(ys)
    for dom in itertools.combinations(xs, size):
        for img in itertools.permutations(ys, size):
            yield PartialBijection(tuple(zip(dom, img)))


def bijection_arrays(
    xs: Sequence[int], ys: Sequence[int], size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Domains and images of all size-``size`` bijections, same order as above."""
    xs, ys = sorted(xs), sorted(ys)
    doms = list(itertools.combinations(xs, size))
    imgs = list(itertools.permutations(ys, size))
    if not doms or not imgs:
        return np.zeros((0, size), dtype=np.int64), np.zeros((0, size), dtype=np.int64)
    if size == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros((1, 0), dtype=np.int64)
    d = np.repeat(np.array(doms, dtype=np.int64).reshape(-1, size), len(imgs), axis=0)
    i = np.tile(np.array(imgs, dtype=np.int64).reshape(-1, size), (len(doms), 1))
    return d, i


# ---------------------------------------------------------------------------
# counting completions


def _rook_numbers(board: frozenset[tuple[int, int]]) -> list[int]:
    rows: dict[int, list[int]] = {}
    for x, y in board:
        rows.setdefault(x, []).append(y)
    cols = sorted({y for _, y in board})
    bit = {y: 1 << i for i, y in enumerate(cols)}
    states = {0: 1}
    for ys in rows.values():
        nxt = dict(states)
        for mask, cnt in states.items():
            for y in ys:
                b = bit[y]
                if not mask & b:
                    nxt[mask | b] = nxt.get(mask | b, 0) + cnt
        states = nxt
    out = [0] * (len(rows) + 1)
    for mask, cnt in states.items():
        out[bin(mask).count("1")] += cnt
    return out


@cache
def _count_from_board(m: int, board: frozenset[tuple[int, int]]) -> int:
    if not board:
        return math.factorial(m)
    rooks = _rook_numbers(board)
    return sum((-1) ** k * rk * math.factorial(m - k) for k, rk in enumerate(rooks) if k <= m)


def count_completions(
    n: int, fixed: dict[int, int], forbidden: Iterable[tuple[int, int]]
) -> int:
    """|{σ ∈ S_n : σ ⊇ fixed, σ(x) ≠ y for (x, y) in forbidden}| by inclusion–exclusion."""
    used = set(fixed.values())
    board = frozenset(
        (x, y) for x, y in forbidden if x not in fixed and y not in used
    )
    for x, y in forbidden:
        if fixed.get(x) == y:
            return 0
    return _count_from_board(n - len(fixed), board)


def _enumerate_completions(
    n: int, fixed: dict[int, int], forbidden: frozenset[tuple[int, int]]
) -> Iterator[Permutation]:
    used_fixed = set(fixed.values())
    free_vals = [v for v in range(n) if v not in used_fixed]
    img = [-1] * n
    taken = [False] * n

    def rec(i: int) -> Iterator[Permutation]:
        if i == n:
            yield tuple(img)
            return
        if i in fixed:
            y = fixed[i]
            if (i, y) in forbidden:
                return
            img[i] = y
            yield from rec(i + 1)
            return
        for y in free_vals:
            if taken[y] or (i, y) in forbidden:
                continue
            taken[y] = True
            img[i] = y
            yield from rec(i + 1)
            taken[y] = False

    yield from rec(0)


# ---------------------------------------------------------------------------
# restriction classes


@dataclass(frozen=True)
class RestrictionClass:
    """S_n(π₁,…,π_l, σ̄₁,…,σ̄_m): agree with every π_i, disagree everywhere with every σ_j."""

    n: int
    agree: tuple[PartialBijection, ...] = ()
    disagree: tuple[PartialBijection, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "agree", tuple(self.agree))
        object.__setattr__(self, "disagree", tuple(self.disagree))
        for pb in self.agree + self.disagree:
            if pb.max_point() >= self.n:
                raise SizeMismatchError(f"constraint {pb} does not fit in [{self.n}]")
        merged = EMPTY
        for pb in self.agree:
            bad = merged.conflict(pb)
            if bad is not None:
                x1, y1, x2, y2 = bad
                raise InfeasibleClassError(
                    f"agree constraints conflict: {x1 + 1}->{y1 + 1} vs {x2 + 1}->{y2 + 1}"
                )
            merged = merged.union(pb)
        for pb in self.disagree:
            for x, y in pb:
                if merged.mapping.get(x) == y:
                    raise InfeasibleClassError(
                        f"pair {x + 1}->{y + 1} is both required and forbidden"
                    )
        object.__setattr__(self, "_fixed", merged)

    @classmethod
    def full(cls, n: int) -> "RestrictionClass":
        return cls(n)

    @property
    def fixed(self) -> PartialBijection:
        """Union of all agree constraints."""
        return self._fixed  # type: ignore[attr-defined]

    @cached_property
    def forbidden(self) -> frozenset[tuple[int, int]]:
        return frozenset(p for pb in self.disagree for p in pb)

    @cached_property
    def effective_forbidden(self) -> frozenset[tuple[int, int]]:
        """Forbidden pairs that actually constrain (free row, free column)."""
        fixed = self.fixed.mapping
        used = self.fixed.range
        return frozenset((x, y) for x, y in self.forbidden if x not in fixed and y not in used)

    @cached_property
    def free_points(self) -> tuple[int, ...]:
        return tuple(x for x in range(self.n) if x not in self.fixed.mapping)

    @cached_property
    def free_values(self) -> tuple[int, ...]:
        return tuple(y for y in range(self.n) if y not in self.fixed.range)

    def is_trivial(self) -> bool:
        return not self.agree and not self.disagree

    def contains(self, sigma: Sequence[int]) -> bool:
        if len(sigma) != self.n:
            return False
        return all(sigma[x] == y for x, y in self.fixed.pairs) and all(
            sigma[x] != y for x, y in self.forbidden
        )

    def size(self, method: str = "auto") -> int:
        """Exact size. ``method`` is "rook", "enumerate" or "auto" (= rook)."""
        if method == "enumerate":
            return sum(1 for _ in self.members())
        return _count_from_board(len(self.free_points), self.effective_forbidden)

    def members(self) -> Iterator[Permutation]:
        """All members in lexicographic order."""
        return _enumerate_completions(self.n, self.fixed.mapping, self.forbidden)

    def extend(
        self,
        agree: Iterable[PartialBijection] = (),
        disagree: Iterable[PartialBijection] = (),
    ) -> "RestrictionClass":
        return RestrictionClass(self.n, self.agree + tuple(agree), self.disagree + tuple(disagree))

    def to_json(self) -> dict:
        return {
            "agree": [pair for pb in self.agree for pair in pb.to_json()],
            "disagree": [pair for pb in self.disagree for pair in pb.to_json()],
        }

    def __str__(self) -> str:
        parts = [str(pb) for pb in self.agree] + [f"not{pb}" for pb in self.disagree]
        return f"S_{self.n}(" + ", ".join(parts) + ")"


def restriction_class_size(R: RestrictionClass, method: str = "auto") -> int:
    return R.size(method)


# ---------------------------------------------------------------------------
# families


def _as_array(perms: Sequence[Permutation], n: int) -> np.ndarray:
    if not perms:
        return np.zeros((0, n), dtype=np.int8)
    return np.array(perms, dtype=np.int8).reshape(-1, n)


@dataclass(frozen=True)
class PermFamily:
    """A set of permutations inside a restriction class."""

    ambient: RestrictionClass
    members: frozenset[Permutation] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        mem = frozenset(tuple(int(v) for v in p) for p in self.members)
        for p in mem:
            if len(p) != self.ambient.n:
                raise SizeMismatchError(
                    f"member {to_one_based(p)} has length {len(p)}, expected {self.ambient.n}"
                )
            if not self.ambient.contains(p):
                raise InfeasibleClassError(
                    f"member {to_one_based(p)} is outside the ambient {self.ambient}"
                )
        object.__setattr__(self, "members", mem)

    @classmethod
    def of(cls, n: int, members: Iterable[Sequence[int]], ambient: RestrictionClass | None = None):
        amb = ambient if ambient is not None else RestrictionClass(n)
        return cls(amb, frozenset(tuple(p) for p in members))

    @classmethod
    def full(cls, ambient: RestrictionClass) -> "PermFamily":
        return cls(ambient, frozenset(ambient.members()))

    @property
    def n(self) -> int:
        return self.ambient.n

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.sorted_members)

    def __contains__(self, sigma: object) -> bool:
        return sigma in self.members

    @cached_property
    def sorted_members(self) -> tuple[Permutation, ...]:
        return tuple(sorted(self.members))

    @cached_property
    def array(self) -> np.ndarray:
        return _as_array(self.sorted_members, self.n)

    def measure(self) -> Fraction:
        size = self.ambient.size()
        if size == 0:
            raise InfeasibleClassError(f"ambient {self.ambient} is empty")
        return Fraction(len(self.members), size)

    def restrict(
        self,
        agree: Iterable[PartialBijection] = (),
        disagree: Iterable[PartialBijection] = (),
    ) -> "PermFamily":
        agree, disagree = tuple(agree), tuple(disagree)
        amb = self.ambient.extend(agree, disagree)
        kept = frozenset(
            p
            for p in self.members
            if all(pb.agrees_with(p) for pb in agree) and all(pb.disagrees_with(p) for pb in disagree)
        )
        return PermFamily(amb, kept)

    def with_ambient(self, ambient: RestrictionClass) -> "PermFamily":
        return PermFamily(ambient, self.members)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ambient": self.ambient.to_json(),
            "members": [to_one_based(p) for p in self.sorted_members],
        }


def measure(F: PermFamily) -> Fraction:
    return F.measure()


def restrict(
    F: PermFamily,
    more_agree: Iterable[PartialBijection] = (),
    more_disagree: Iterable[PartialBijection] = (),
) -> PermFamily:
    return F.restrict(more_agree, more_disagree)


def pairwise_agreement_counts(A: np.ndarray, B: np.ndarray, chunk: int = 512) -> Iterator[np.ndarray]:
    """Yield blocks of the |A| x |B| agreement-count matrix, row chunk by row chunk."""
    for start in range(0, A.shape[0], chunk):
        block = A[start : start + chunk]
        yield (block[:, None, :] == B[None, :, :]).sum(axis=2)


def _distinct_pair_counts(F: PermFamily) -> Iterator[np.ndarray]:
    A = F.array
    for start, block in zip(range(0, A.shape[0], 512), pairwise_agreement_counts(A, A)):
        rows = np.arange(start, start + block.shape[0])
        block = block.copy()
        block[np.arange(block.shape[0]), rows] = -1  # mask the diagonal
        yield block


def is_t_intersecting(F: PermFamily, t: int) -> bool:
    """Every two distinct members agree on at least t points."""
    for block in _distinct_pair_counts(F):
        b = block[block >= 0]
        if b.size and b.min() < t:
            return False
    return True


def is_intersection_free(F: PermFamily, t_minus_1: int) -> bool:
    """No two distinct members agree on exactly ``t_minus_1`` points."""
    for block in _distinct_pair_counts(F):
        if np.any(block == t_minus_1):
            return False
    return True


# ---------------------------------------------------------------------------
# juntas


@dataclass(frozen=True)
class Junta:
    """⟨π₁,…,π_l⟩: permutations extending at least one generator."""

    n: int
    generators: tuple[PartialBijection, ...] = ()

    def __post_init__(self) -> None:
        gens = tuple(sorted(set(self.generators), key=PartialBijection.sort_key))
        for g in gens:
            if g.max_point() >= self.n:
                raise SizeMismatchError(f"generator {g} does not fit in [{self.n}]")
        object.__setattr__(self, "generators", gens)

    @property
    def complexity(self) -> int:
        return max([len(self.generators)] + [len(g) for g in self.generators])

    def contains(self, sigma: Sequence[int]) -> bool:
        return any(g.agrees_with(sigma) for g in self.generators)

    def size(self, method: str = "auto") -> int:
        if method == "enumerate" or (method == "auto" and len(self.generators) > 16 and self.n <= 9):
            return sum(1 for p in all_permutations(self.n) if self.contains(p))
        total = 0
        gens = self.generators
        for k in range(1, len(gens) + 1):
            for combo in itertools.combinations(gens, k):
                merged = EMPTY
                ok = True
                for g in combo:
                    if merged.conflict(g) is not None:
                        ok = False
                        break
                    merged = merged.union(g)
                if ok:
                    total += (-1) ** (k + 1) * math.factorial(self.n - len(merged))
        return total

    def members(self) -> Iterator[Permutation]:
        return (p for p in all_permutations(self.n) if self.contains(p))


def junta_membership(J: Junta, sigma: Sequence[int]) -> bool:
    return J.contains(sigma)


def junta_size(J: Junta, method: str = "auto") -> int:
    return J.size(method)

"""Partitions, tableaux, characters of S_n and Cayley-graph eigenvalues.

Characters are class functions and are stored per cycle type.  Irreducible
characters are computed as signed sums of permutation characters (one
permutation character per row-length vector obtained by shifting the rows of
the target shape); a rim-hook recursion is kept as an independent oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from typing import Iterable, Sequence

from permjunta.errors import ContractError, DegenerateInputError, ResourceLimitError

Partition = tuple[int, ...]
CycleType = tuple[int, ...]

#: Largest n for which the full determinantal sum is evaluated unconditionally.
FULL_CHARACTER_MAX_N = 8
#: For larger n, shapes with at most this many rows are still allowed.
MAX_DETERMINANT_ROWS = 8
MAX_TABLEAU_N = 12


def validate_partition(parts: Sequence[int]) -> Partition:
    p = tuple(int(v) for v in parts)
    if not p or any(v < 1 for v in p) or any(a < b for a, b in zip(p, p[1:])):
        raise ValueError(f"{list(p)} is not a partition")
    return p


def partition_str(p: Partition) -> str:
    return "+".join(str(v) for v in p)


def parse_partition(text: str) -> Partition:
    return validate_partition([int(v) for v in text.replace(",", "+").split("+") if v.strip()])


@cache
def partitions_of(n: int) -> tuple[Partition, ...]:
    """All partitions of n in decreasing lexicographic order, (n) first."""
    if n < 1:
        raise ValueError("n must be positive")

    def gen(remaining: int, cap: int) -> Iterable[Partition]:
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in gen(remaining - first, first):
                yield (first,) + rest

    return tuple(gen(n, n))


def largest_part_equal(n: int, s: int) -> tuple[Partition, ...]:
    """L_n(s)."""
    return tuple(p for p in partitions_of(n) if p[0] == s)


def largest_part_at_least(n: int, s: int) -> tuple[Partition, ...]:
    """L_n(≥s)."""
    return tuple(p for p in partitions_of(n) if p[0] >= s)


def largest_part_below(n: int, s: int) -> tuple[Partition, ...]:
    """L_n(<s)."""
    return tuple(p for p in partitions_of(n) if p[0] < s)


def nontrivial_largest_part_at_least(n: int, s: int) -> tuple[Partition, ...]:
    """L*_n(≥s): as L_n(≥s) but without the trivial shape (n)."""
    return tuple(p for p in largest_part_at_least(n, s) if p != (n,))


def transpose(p: Partition) -> Partition:
    if not p:
        return ()
    return tuple(sum(1 for v in p if v > j) for j in range(p[0]))


def hook_lengths(p: Partition) -> list[int]:
    pt = transpose(p)
    return [p[i] - j + pt[j] - i - 1 for i in range(len(p)) for j in range(p[i])]


@cache
def dimension_hook(p: Partition) -> int:
    """f^λ = n! / ∏ hook lengths."""
    n = sum(p)
    prod = math.prod(hook_lengths(p))
    q, r = divmod(math.factorial(n), prod)
    assert r == 0
    return q


def count_standard_tableaux(p: Partition) -> int:
    """Count standard tableaux by filling cells with 1..n one at a time."""
    n = sum(p)
    if n > MAX_TABLEAU_N:
        raise ResourceLimitError(f"tableau enumeration is capped at n = {MAX_TABLEAU_N}")
    rows = [0] * len(p)

    def rec(placed: int) -> int:
        if placed == n:
            return 1
        total = 0
        for i in range(len(p)):
            if rows[i] < p[i] and (i == 0 or rows[i - 1] > rows[i]):
                rows[i] += 1
                total += rec(placed + 1)
                rows[i] -= 1
        return total

    return rec(0)


def kostka(shape: Partition, content: Partition) -> int:
    """Number of semistandard tableaux of the given shape and content.

    Entries are placed value by value; the cells holding one value form a
    horizontal strip, so row i may grow only up to the previous length of
    row i - 1.
    """
    if sum(shape) != sum(content):
        raise ContractError("shape and content must have the same size")
    rows = len(shape)

    def strips(cur: tuple[int, ...], k: int) -> Iterable[tuple[int, ...]]:
        def place(i: int, left: int, acc: list[int]) -> Iterable[tuple[int, ...]]:
            if i == rows:
                if left == 0:
                    yield tuple(acc)
                return
            cap = shape[i] if i == 0 else min(shape[i], cur[i - 1])
            for take in range(min(cap - cur[i], left), -1, -1):
                acc.append(cur[i] + take)
                yield from place(i + 1, left - take, acc)
                acc.pop()

        return place(0, k, [])

    @cache
    def rec(cur: tuple[int, ...], idx: int) -> int:
        if idx == len(content):
            return 1 if cur == tuple(shape) else 0
        return sum(rec(nxt, idx + 1) for nxt in strips(cur, content[idx]))

    return rec((0,) * rows, 0)


def lex_ge(a: Partition, b: Partition) -> bool:
    return tuple(a) >= tuple(b)


# ---------------------------------------------------------------------------
# conjugacy classes


def conjugacy_classes(n: int) -> tuple[CycleType, ...]:
    return partitions_of(n)


@cache
def class_size(c: CycleType) -> int:
    n = sum(c)
    denom = 1
    for length in set(c):
        m = c.count(length)
        denom *= length**m * math.factorial(m)
    return math.factorial(n) // denom


def class_sign(c: CycleType) -> int:
    return -1 if (sum(c) - len(c)) % 2 else 1


def fixed_point_count(c: CycleType) -> int:
    return c.count(1)


# ---------------------------------------------------------------------------
# permutation characters


@cache
def _xi(cycle_lengths: tuple[int, ...], caps: tuple[int, ...]) -> int:
    if not cycle_lengths:
        return 1 if all(c == 0 for c in caps) else 0
    first, rest = cycle_lengths[0], cycle_lengths[1:]
    total = 0
    for cap in set(caps):
        if cap >= first:
            mult = caps.count(cap)
            new = list(caps)
            new.remove(cap)
            new.append(cap - first)
            total += mult * _xi(rest, tuple(sorted(new, reverse=True)))
    return total


def permutation_character(beta: Sequence[int], c: CycleType) -> int:
    """ξ_β(c): ways to split the cycles of a class-c permutation into rows of sizes β."""
    if sum(beta) != sum(c):
        raise ContractError("row sizes and cycle type must have the same total")
    return _xi(tuple(sorted(c, reverse=True)), tuple(sorted(beta, reverse=True)))


# ---------------------------------------------------------------------------
# irreducible characters


def _shifted_rows(alpha: Partition, pi: Sequence[int]) -> tuple[int, ...] | None:
    """The row vector α_i − i + π(i), re-sorted with zeros removed; None if negative."""
    rows = []
    for i, a in enumerate(alpha):
        v = a - i + pi[i]
        if v < 0:
            return None
        if v:
            rows.append(v)
    return tuple(sorted(rows, reverse=True))


def _sign_of(pi: Sequence[int]) -> int:
    inv = sum(1 for i in range(len(pi)) for j in range(i + 1, len(pi)) if pi[i] > pi[j])
    return -1 if inv % 2 else 1


def determinantal_expansion(alpha: Partition, width: int | None = None) -> dict[Partition, int]:
    """Coefficients c_β with χ_α = Σ_β c_β ξ_β.

    ``width`` pads α with zero rows and sums over S_width; by default the sum
    runs over permutations of the non-zero rows only, which gives the same
    coefficients because a padded row forces π to fix it.
    """
    alpha = validate_partition(alpha)
    w = len(alpha) if width is None else width
    if w < len(alpha):
        raise ValueError("width smaller than the number of rows")
    return dict(_expansion(alpha, w))


@cache
def _expansion(alpha: Partition, width: int) -> tuple[tuple[Partition, int], ...]:
    padded = alpha + (0,) * (width - len(alpha))
    coeffs: dict[Partition, int] = {}
    for pi in itertools.permutations(range(width)):
        rows = _shifted_rows(padded, pi)
        if rows is None:
            continue
        coeffs[rows] = coeffs.get(rows, 0) + _sign_of(pi)
    return tuple(sorted(((b, c) for b, c in coeffs.items() if c), reverse=True))


def expansion_weight(alpha: Partition) -> int:
    """Σ|c_β| over the determinantal expansion of χ_α."""
    return sum(abs(c) for c in determinantal_expansion(alpha).values())


@dataclass(frozen=True)
class CharacterVector:
    alpha: Partition
    values: dict[CycleType, int]

    def __call__(self, c: CycleType) -> int:
        return self.values[tuple(c)]

    @property
    def degree(self) -> int:
        n = sum(self.alpha)
        return self.values[(1,) * n]


@cache
def _mn(beta: tuple[int, ...], mu: tuple[int, ...]) -> int:
    # beta: strictly decreasing beta-set of the current shape
    if not mu:
        return 1
    k, rest = mu[0], mu[1:]
    total = 0
    bset = set(beta)
    for b in beta:
        tgt = b - k
        if tgt < 0 or tgt in bset:
            continue
        height = sum(1 for c in beta if tgt < c < b)
        new = tuple(sorted((bset - {b}) | {tgt}, reverse=True))
        total += (-1) ** height * _mn(new, rest)
    return total


def mn_character_value(alpha: Partition, c: CycleType) -> int:
    """χ_α(c) by the rim-hook (Murnaghan–Nakayama) rule."""
    alpha = validate_partition(alpha)
    if sum(alpha) != sum(c):
        raise ContractError("shape and class must have the same size")
    l = len(alpha)
    beta = tuple(alpha[i] + (l - 1 - i) for i in range(l))
    return _mn(beta, tuple(sorted(c, reverse=True)))


def determinantal_allowed(alpha: Partition) -> bool:
    n = sum(alpha)
    return n <= FULL_CHARACTER_MAX_N or len(alpha) <= MAX_DETERMINANT_ROWS


@cache
def _character(alpha: Partition, method: str) -> CharacterVector:
    n = sum(alpha)
    classes = conjugacy_classes(n)
    if method == "murnaghan-nakayama":
        return CharacterVector(alpha, {c: mn_character_value(alpha, c) for c in classes})
    if not determinantal_allowed(alpha):
        raise ResourceLimitError(
            f"character of {partition_str(alpha)}: n = {n} exceeds {FULL_CHARACTER_MAX_N} and the "
            f"shape has {len(alpha)} rows (truncated sum allows at most {MAX_DETERMINANT_ROWS})"
        )
    exp = determinantal_expansion(alpha)
    values = {c: sum(coef * permutation_character(b, c) for b, coef in exp.items()) for c in classes}
    return CharacterVector(alpha, values)


def irreducible_character(alpha: Sequence[int], method: str = "determinantal") -> CharacterVector:
    """χ_α on every conjugacy class.

    ``method`` is "determinantal" (default) or "murnaghan-nakayama".
    """
    if method not in ("determinantal", "murnaghan-nakayama"):
        raise ValueError(f"unknown method {method!r}")
    return _character(validate_partition(alpha), method)


def character_inner_product(chi: CharacterVector, psi: CharacterVector) -> Fraction:
    n = sum(chi.alpha)
    total = sum(class_size(c) * chi(c) * psi(c) for c in conjugacy_classes(n))
    return Fraction(total, math.factorial(n))


# ---------------------------------------------------------------------------
# derangements and eigenvalues


@cache
def derangement_count(m: int) -> int:
    """d_m = Σ_j (−1)^j m!/j!, with d_0 = 1."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return sum((-1) ** j * (math.factorial(m) // math.factorial(j)) for j in range(m + 1))


def signed_derangement_sum(m: int) -> int:
    """Σ_{σ ∈ D_m} sgn(σ), summed over derangement classes."""
    if m < 1:
        raise ValueError("defined for m >= 1")
    return sum(class_size(c) * class_sign(c) for c in conjugacy_classes(m) if 1 not in c)


def generator_classes(n: int, a: int) -> tuple[CycleType, ...]:
    """Classes of permutations with exactly ``a`` fixed points."""
    return tuple(c for c in conjugacy_classes(n) if fixed_point_count(c) == a)


def generator_count(n: int, a: int) -> int:
    return sum(class_size(c) for c in generator_classes(n, a))


def cayley_eigenvalue(alpha: Sequence[int], a: int = 0, method: str = "determinantal") -> Fraction:
    """Normalised eigenvalue on the α-isotypic block of Cay(S_n, {exactly a fixed points})."""
    alpha = validate_partition(alpha)
    n = sum(alpha)
    classes = generator_classes(n, a)
    deg = sum(class_size(c) for c in classes)
    if deg == 0:
        raise DegenerateInputError(f"no permutation of [{n}] has exactly {a} fixed points")
    chi = irreducible_character(alpha, method)
    num = sum(class_size(c) * chi(c) for c in classes)
    return Fraction(num, dimension_hook(alpha) * deg)


def derangement_eigenvalue(alpha: Sequence[int], method: str = "determinantal") -> Fraction:
    """λ_α for the derangement graph, normalised so that λ_(n) = 1."""
    return cayley_eigenvalue(alpha, 0, method)


@dataclass(frozen=True)
class EigenvalueBoundReport:
    n: int
    r: int
    eigenvalues: dict[Partition, Fraction]
    violations: tuple[Partition, ...]
    max_below: Fraction | None
    max_above: Fraction | None

    @property
    def ok(self) -> bool:
        return not self.violations


def eigenvalue_bound_check(n: int, r: int) -> EigenvalueBoundReport:
    """Check |λ_α| ≤ √(n!/d_n)/f^α for every α ⊢ n and tabulate the two eigenvalue maxima.

    ``max_below`` is the maximum over shapes with first row < n − r and
    ``max_above`` over non-trivial shapes with first row ≥ n − r.
    """
    if n > 9:
        raise ResourceLimitError("eigenvalue bound check is capped at n = 9")
    method = "determinantal" if n <= FULL_CHARACTER_MAX_N else "murnaghan-nakayama"
    ratio = Fraction(math.factorial(n), derangement_count(n))
    eig: dict[Partition, Fraction] = {}
    bad = []
    for alpha in partitions_of(n):
        lam = derangement_eigenvalue(alpha, method)
        eig[alpha] = lam
        scaled = abs(lam) * dimension_hook(alpha)
        if scaled * scaled > ratio:
            bad.append(alpha)
    below = [abs(eig[a]) for a in largest_part_below(n, n - r)]
    above = [abs(eig[a]) for a in nontrivial_largest_part_at_least(n, n - r)]
    return EigenvalueBoundReport(
        n,
        r,
        eig,
        tuple(bad),
        max(below) if below else None,
        max(above) if above else None,
    )


@dataclass(frozen=True)
class SpectrumRow:
    partition: Partition
    f_alpha: int
    eigenvalue: Fraction


def spectrum(n: int, a: int = 0, max_n: int = FULL_CHARACTER_MAX_N) -> list[SpectrumRow]:
    """Normalised spectrum of the agreement-a Cayley graph, one row per α ⊢ n."""
    if n > max_n:
        raise ResourceLimitError(f"spectrum requested for n = {n}; the ceiling is n = {max_n}")
    return [SpectrumRow(alpha, dimension_hook(alpha), cayley_eigenvalue(alpha, a)) for alpha in partitions_of(n)]

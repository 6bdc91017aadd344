"""Extremal numbers at small n: agreement graphs, exact independent sets, star counts and gaps."""

from __future__ import annotations

import itertools
import math
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cache, cached_property
from typing import Sequence

import numpy as np

from permjunta.errors import ContractError, InvariantViolation, ResourceLimitError
from permjunta.exact import format_fraction
from permjunta.perm import (
    PartialBijection,
    Permutation,
    PermFamily,
    all_permutations,
    compose,
    fixed_points,
    identity,
    inverse,
    is_intersection_free,
    to_one_based,
)
from permjunta.rep_theory import (
    dimension_hook,
    derangement_count,
    generator_count,
    partitions_of,
    spectrum,
)

EXACT_MAX_N = 5
LONG_RUNNING_MAX_N = 6
SPECTRUM_MAX_N = 8
DIAGONALIZE_MAX_N = 5
GRAPH_MAX_N = 8
STAR_SCAN_LIMIT = 2_000_000


# ---------------------------------------------------------------------------
# agreement graphs


@dataclass(frozen=True)
class AgreementGraph:
    """Cayley graph on S_n joining two permutations when they agree in exactly ``a`` places."""

    n: int
    a: int
    generators: frozenset[Permutation]

    @property
    def degree(self) -> int:
        return len(self.generators)

    @property
    def edgeless(self) -> bool:
        # a = n gives only self-loops, which never join two distinct members
        return self.degree == 0 or self.generators == {identity(self.n)}

    @property
    def order(self) -> int:
        return math.factorial(self.n)

    def adjacent(self, sigma: Sequence[int], tau: Sequence[int]) -> bool:
        return compose(inverse(tuple(sigma)), tuple(tau)) in self.generators

    def is_independent(self, F: PermFamily) -> bool:
        """No two members joined by a generator (checked through σ⁻¹τ, not agreement counts)."""
        members = F.sorted_members
        return not any(self.adjacent(p, q) for p, q in itertools.combinations(members, 2))

    @cached_property
    def vertices(self) -> tuple[Permutation, ...]:
        return all_permutations(self.n)

    @cached_property
    def neighbour_bits(self) -> tuple[int, ...]:
        index = {p: i for i, p in enumerate(self.vertices)}
        out = []
        for p in self.vertices:
            bits = 0
            for g in self.generators:
                bits |= 1 << index[compose(p, g)]
            out.append(bits)
        return tuple(out)


def degree_formula(n: int, a: int) -> int:
    return math.comb(n, a) * derangement_count(n - a)


def build_agreement_graph(n: int, a: int) -> AgreementGraph:
    if not 0 <= a <= n:
        raise ContractError(f"agreement count a = {a} must lie in [0, {n}]")
    if n > GRAPH_MAX_N:
        raise ResourceLimitError(f"agreement graph requested for n = {n}; the ceiling is n = {GRAPH_MAX_N}")
    gens = frozenset(p for p in all_permutations(n) if fixed_points(p) == a)
    if len(gens) != degree_formula(n, a) or len(gens) != generator_count(n, a):
        raise InvariantViolation(f"degree {len(gens)} disagrees with C(n,a)·d_(n-a) = {degree_formula(n, a)}")
    return AgreementGraph(n, a, gens)


def is_intersection_free_via_graph(F: PermFamily, t_minus_1: int) -> bool:
    return build_agreement_graph(F.n, t_minus_1).is_independent(F)


# ---------------------------------------------------------------------------
# exact maximum independent set (maximum clique in the complement)


class _Search:
    def __init__(self, comp: list[int], order: list[int], best: list[int]):
        self.comp = comp
        self.order = order
        self.best = list(best)
        self.lock = threading.Lock()

    def _colour(self, P: int) -> tuple[list[int], list[int]]:
        # greedy sequential colouring in the fixed vertex order; colour classes are cliques of
        # the original graph, hence independent in the complement
        classes: list[int] = []
        members: list[list[int]] = []
        for v in self.order:
            if not P >> v & 1:
                continue
            for k, bits in enumerate(classes):
                if not bits & self.comp[v]:
                    classes[k] |= 1 << v
                    members[k].append(v)
                    break
            else:
                classes.append(1 << v)
                members.append([v])
        verts, colours = [], []
        for k, vs in enumerate(members):
            verts.extend(vs)
            colours.extend([k + 1] * len(vs))
        return verts, colours

    def _record(self, R: list[int]) -> None:
        with self.lock:
            if len(R) > len(self.best):
                self.best = list(R)

    def expand(self, R: list[int], P: int) -> None:
        verts, colours = self._colour(P)
        for idx in range(len(verts) - 1, -1, -1):
            if len(R) + colours[idx] <= len(self.best):
                return
            v = verts[idx]
            newP = P & self.comp[v]
            if newP:
                self.expand(R + [v], newP)
            else:
                self._record(R + [v])
            P &= ~(1 << v)

    def root_branches(self, R: list[int], P: int) -> list[tuple[list[int], int, int]]:
        verts, colours = self._colour(P)
        out = []
        for idx in range(len(verts) - 1, -1, -1):
            v = verts[idx]
            out.append((R + [v], P & self.comp[v], len(R) + colours[idx]))
            P &= ~(1 << v)
        return out

    def run_branch(self, R: list[int], P: int, bound: int) -> None:
        if bound <= len(self.best):
            return
        if P:
            self.expand(R, P)
        else:
            self._record(R)


def max_independent_family(
    g: AgreementGraph,
    symmetry: bool = True,
    threads: int = 1,
    long_running: bool = False,
) -> tuple[int, PermFamily]:
    """Exact independence number of an agreement graph with one maximum witness.

    With ``symmetry`` the identity is put in the family first, which is sound because
    Cayley graphs are vertex-transitive.
    """
    cap = LONG_RUNNING_MAX_N if long_running else EXACT_MAX_N
    if g.n > cap:
        raise ResourceLimitError(f"exact search requested for n = {g.n}; the ceiling is n = {cap}")
    verts = g.vertices
    N = len(verts)
    full = (1 << N) - 1
    if g.edgeless:
        return N, PermFamily.of(g.n, verts)
    nbr = g.neighbour_bits
    comp = [full & ~nbr[i] & ~(1 << i) for i in range(N)]
    if symmetry:
        root = verts.index(identity(g.n))
        R, P = [root], comp[root]
    else:
        R, P = [], full
    # process vertices of high residual degree first
    order = sorted(range(N), key=lambda v: (-(comp[v] & P).bit_count(), v))
    search = _Search(comp, order, R)
    branches = search.root_branches(R, P) if P else []
    if threads > 1 and len(branches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: search.run_branch(*b), branches))
    else:
        for b in branches:
            search.run_branch(*b)
    witness = PermFamily.of(g.n, [verts[i] for i in search.best])
    if not g.is_independent(witness) or not is_intersection_free(witness, g.a):
        raise InvariantViolation("search returned a family that is not independent")
    return len(witness), witness


# ---------------------------------------------------------------------------
# spectral bounds


@cache
def agreement_spectrum(n: int, a: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """Normalised eigenvalue of each isotypic block; the trivial shape has eigenvalue 1."""
    if n > SPECTRUM_MAX_N:
        raise ResourceLimitError(f"spectrum requested for n = {n}; the ceiling is n = {SPECTRUM_MAX_N}")
    if generator_count(n, a) == 0:
        return tuple((alpha, Fraction(0)) for alpha in partitions_of(n))
    return tuple((row.partition, row.eigenvalue) for row in spectrum(n, a, SPECTRUM_MAX_N))


def adjacency_matrix(g: AgreementGraph) -> np.ndarray:
    if g.n > DIAGONALIZE_MAX_N:
        raise ResourceLimitError(f"dense adjacency requested for n = {g.n}; the ceiling is n = {DIAGONALIZE_MAX_N}")
    N = len(g.vertices)
    A = np.zeros((N, N))
    for i, bits in enumerate(g.neighbour_bits):
        for j in range(N):
            if bits >> j & 1:
                A[i, j] = 1.0
    return A


def diagonalized_spectrum(g: AgreementGraph) -> np.ndarray:
    """Sorted adjacency eigenvalues by dense diagonalization (floating point)."""
    return np.sort(np.linalg.eigvalsh(adjacency_matrix(g)))


def predicted_spectrum(g: AgreementGraph) -> np.ndarray:
    """Sorted adjacency eigenvalues from characters, each with multiplicity (f^α)²."""
    vals = []
    for alpha, lam in agreement_spectrum(g.n, g.a):
        vals += [float(lam * g.degree)] * dimension_hook(alpha) ** 2
    return np.sort(np.array(vals))


def hoffman_bound(g: AgreementGraph) -> Fraction:
    """Ratio bound n!·(−λ_min)/(1−λ_min); n! for an edgeless graph."""
    if g.edgeless:
        return Fraction(g.order)
    lam_min = min(lam for _, lam in agreement_spectrum(g.n, g.a))
    if lam_min >= 0:
        raise InvariantViolation("a graph with edges must have a negative eigenvalue")
    return g.order * -lam_min / (1 - lam_min)


def turan_baseline(g: AgreementGraph) -> Fraction:
    """Guaranteed independent set size n!/(deg+1)."""
    return Fraction(g.order, g.degree + 1)


@dataclass(frozen=True)
class ExtremalResult:
    n: int
    a: int
    size: int
    witness: PermFamily
    hoffman: Fraction | None
    turan: Fraction

    @property
    def tight(self) -> bool:
        return self.hoffman is not None and self.hoffman == self.size

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "forbidden_agreements": self.a,
            "size": self.size,
            "witness": [to_one_based(p) for p in self.witness.sorted_members],
            "hoffman_bound": None if self.hoffman is None else format_fraction(self.hoffman),
            "hoffman_tight": self.tight,
            "turan_baseline": format_fraction(self.turan),
        }


def search_extremal(
    n: int, a: int, symmetry: bool = True, threads: int = 1, long_running: bool = False
) -> ExtremalResult:
    g = build_agreement_graph(n, a)
    size, witness = max_independent_family(g, symmetry, threads, long_running)
    hb = hoffman_bound(g) if n <= SPECTRUM_MAX_N else None
    if hb is not None and hb < size:
        raise InvariantViolation(f"Hoffman bound {hb} is below the exact value {size}")
    return ExtremalResult(n, a, size, witness, hb, turan_baseline(g))


# ---------------------------------------------------------------------------
# counting agreements inside a star


def _comb(m: int, k: int) -> int:
    return math.comb(m, k) if m >= 0 and 0 <= k <= m else 0


def _falling(x: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= x - j
    return out


def _derangements_or_zero(m: int) -> int:
    return derangement_count(m) if m >= 0 else 0


@dataclass(frozen=True)
class StarCount:
    n: int
    t: int
    fixed_in_star: int
    outside_preimages: int
    formula: int
    brute_force: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "s": self.fixed_in_star,
            "v": self.outside_preimages,
            "formula": self.formula,
            "brute_force": self.brute_force,
        }


def star_count_formula(n: int, t: int, s: int, v: int) -> int:
    m = n - 2 * t + s + 1
    return _comb(n - t - v, t - s - 1) * _falling(m, v) * _derangements_or_zero(m - v)


def count_agreeing_in_star(rho: Sequence[int], t: int, n: int) -> StarCount:
    """Members of the star fixing [t] that agree with ρ in exactly t−1 places: lower bound and exact count."""
    rho = tuple(rho)
    if len(rho) != n or sorted(rho) != list(range(n)):
        raise ContractError(f"{to_one_based(rho)} is not a permutation of [{n}]")
    if not 1 <= t <= n:
        raise ContractError(f"t = {t} must lie in [1, {n}]")
    head = range(t)
    s = sum(1 for i in head if rho[i] == i)
    if s == t:
        raise ContractError(f"{to_one_based(rho)} lies in the star fixing 1..{t}")
    inv = inverse(rho)
    v = sum(1 for y in head if inv[y] >= t)
    formula = star_count_formula(n, t, s, v)
    brute = 0
    for tail in itertools.permutations(range(t, n)):
        agree = s + sum(1 for i, y in enumerate(tail, start=t) if rho[i] == y)
        if agree == t - 1:
            brute += 1
    if brute < formula:
        raise InvariantViolation(f"exact count {brute} is below the lower bound {formula}")
    return StarCount(n, t, s, v, formula, brute)


# ---------------------------------------------------------------------------
# conjectured extremal families


def _check_conjecture_range(n: int, t: int, i: int) -> None:
    if t < 1 or i < 0 or t + 2 * i > n:
        raise ContractError(f"need t >= 1 and 0 <= i <= (n - t)/2; got n={n}, t={t}, i={i}")


def conjecture_family(n: int, t: int, i: int) -> PermFamily:
    """Permutations with at least t+i fixed points among the first t+2i."""
    _check_conjecture_range(n, t, i)
    if n > GRAPH_MAX_N:
        raise ResourceLimitError(f"enumeration requested for n = {n}; the ceiling is n = {GRAPH_MAX_N}")
    m = t + 2 * i
    return PermFamily.of(n, (p for p in all_permutations(n) if sum(p[j] == j for j in range(m)) >= t + i))


def conjecture_family_size(n: int, t: int, i: int, method: str = "auto") -> int:
    _check_conjecture_range(n, t, i)
    if method == "enumerate" or (method == "auto" and n <= GRAPH_MAX_N):
        return len(conjecture_family(n, t, i))
    if method not in ("auto", "inclusion-exclusion"):
        raise ContractError(f"unknown method {method!r}")
    m = t + 2 * i
    total = 0
    for j in range(t + i, m + 1):
        # permutations with exactly j fixed points in [m]
        total += sum(
            (-1) ** (k - j) * math.comb(k, j) * math.comb(m, k) * math.factorial(n - k) for k in range(j, m + 1)
        )
    return total


def conjecture_table(n: int, t: int, method: str = "auto") -> list[tuple[int, int]]:
    return [(i, conjecture_family_size(n, t, i, method)) for i in range((n - t) // 2 + 1)]


# ---------------------------------------------------------------------------
# stability


def stability_gap(F: PermFamily, t: int) -> tuple[PartialBijection, int]:
    """A t-star G minimising |F \\ G|, with that gap. Ties go to the lexicographically first star."""
    n = F.n
    if not 1 <= t <= n:
        raise ContractError(f"t = {t} must lie in [1, {n}]")
    stars = math.comb(n, t) ** 2 * math.factorial(t)
    if stars > STAR_SCAN_LIMIT:
        raise ResourceLimitError(f"{stars} stars to scan exceeds the limit {STAR_SCAN_LIMIT}")
    best: tuple[int, tuple[int, ...], tuple[int, ...]] | None = None
    A = F.array
    for dom in itertools.combinations(range(n), t):
        counts = Counter(map(tuple, A[:, list(dom)].tolist())) if len(F) else Counter()
        if counts:
            top = max(counts.values())
            img = min(k for k, c in counts.items() if c == top)
        else:
            top, img = 0, dom
        if best is None or top > best[0]:
            best = (top, dom, img)
    assert best is not None
    top, dom, img = best
    return PartialBijection(tuple(zip(dom, img))), len(F) - top


__all__ = [
    "AgreementGraph",
    "ExtremalResult",
    "StarCount",
    "adjacency_matrix",
    "agreement_spectrum",
    "diagonalized_spectrum",
    "predicted_spectrum",
    "build_agreement_graph",
    "conjecture_family",
    "conjecture_family_size",
    "conjecture_table",
    "count_agreeing_in_star",
    "degree_formula",
    "hoffman_bound",
    "is_intersection_free_via_graph",
    "max_independent_family",
    "search_extremal",
    "stability_gap",
    "star_count_formula",
    "turan_baseline",
]

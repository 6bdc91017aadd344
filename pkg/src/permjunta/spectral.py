"""Functions on S_n, isotypic projection norms and the derangement operator.

Projection norms are never computed by materialising P_α f.  Two routes are
available and cross-checked in the tests:

* pair route: group the pairs (σ, π) of the two supports by the cycle type
  of σπ⁻¹ and weight each class with χ_α;
* tabloid route: expand χ_α into permutation characters ξ_β and evaluate each
  ξ_β-form as a sum of squares over pairs of tabloids.  Cheap whenever α has
  a long first row.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache, cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from permjunta.errors import ContractError, DegenerateInputError, ResourceLimitError
from permjunta.perm import (
    PermFamily,
    Permutation,
    RestrictionClass,
    all_permutations,
    derangements,
    inverse,
)
from permjunta.rep_theory import (
    Partition,
    derangement_count,
    derangement_eigenvalue,
    determinantal_expansion,
    dimension_hook,
    irreducible_character,
    largest_part_below,
    nontrivial_largest_part_at_least,
    partitions_of,
)

DENSE_MAX_N = 8
DEFAULT_PAIR_BUDGET = 40_000_000


@dataclass(frozen=True)
class FunctionOnSn:
    """A sparse rational-valued function on a restriction class (absent = 0)."""

    n: int
    values: Mapping[Permutation, Fraction] = field(default_factory=dict)
    ambient: RestrictionClass | None = None
    bounded: bool = True

    def __post_init__(self) -> None:
        amb = self.ambient if self.ambient is not None else RestrictionClass(self.n)
        if amb.n != self.n:
            raise ContractError("ambient lives on a different ground set")
        clean: dict[Permutation, Fraction] = {}
        for p, v in self.values.items():
            q = Fraction(v)
            if q == 0:
                continue
            p = tuple(p)
            if len(p) != self.n or not amb.contains(p):
                raise ContractError(f"point {[x + 1 for x in p]} is outside the ambient")
            if self.bounded and not 0 <= q <= 1:
                raise ContractError(f"value {q} outside [0, 1]")
            clean[p] = q
        object.__setattr__(self, "ambient", amb)
        object.__setattr__(self, "values", clean)

    @classmethod
    def indicator(cls, F: PermFamily) -> "FunctionOnSn":
        return cls(F.n, {p: Fraction(1) for p in F.members}, F.ambient)

    @classmethod
    def constant(cls, n: int, c: Fraction | int, ambient: RestrictionClass | None = None):
        amb = ambient if ambient is not None else RestrictionClass(n)
        return cls(n, {p: Fraction(c) for p in amb.members()}, amb)

    def __call__(self, sigma: Sequence[int]) -> Fraction:
        return self.values.get(tuple(sigma), Fraction(0))

    @cached_property
    def support(self) -> tuple[Permutation, ...]:
        return tuple(sorted(self.values))

    @cached_property
    def _integer_form(self) -> tuple[np.ndarray, list[int], int]:
        den = 1
        for v in self.values.values():
            den = den * v.denominator // math.gcd(den, v.denominator)
        nums = [int(self.values[p] * den) for p in self.support]
        arr = (
            np.array(self.support, dtype=np.int64).reshape(-1, self.n)
            if self.support
            else np.zeros((0, self.n), dtype=np.int64)
        )
        return arr, nums, den

    def total(self) -> Fraction:
        return sum(self.values.values(), Fraction(0))

    def mean(self) -> Fraction:
        size = self.ambient.size()
        if size == 0:
            raise DegenerateInputError("empty ambient")
        return self.total() / size

    def norm_sq(self) -> Fraction:
        """⟨f, f⟩ with the uniform probability measure on the ambient."""
        return sum((v * v for v in self.values.values()), Fraction(0)) / self.ambient.size()

    def inner(self, other: "FunctionOnSn") -> Fraction:
        _same_space(self, other)
        small, big = (self, other) if len(self.values) <= len(other.values) else (other, self)
        tot = sum((v * big(p) for p, v in small.values.items()), Fraction(0))
        return tot / self.ambient.size()


def _same_space(f: FunctionOnSn, g: FunctionOnSn) -> None:
    if f.n != g.n:
        raise ContractError(f"functions on S_{f.n} and S_{g.n}")


def _require_trivial(*fs: FunctionOnSn) -> None:
    for f in fs:
        if not f.ambient.is_trivial():
            raise ContractError("spectral operations need functions on all of S_n")


# ---------------------------------------------------------------------------
# vectorised permutation helpers


def rank_permutations(arr: np.ndarray) -> np.ndarray:
    """Lexicographic ranks of the rows of ``arr`` (matches all_permutations order)."""
    m, n = arr.shape
    ranks = np.zeros(m, dtype=np.int64)
    for i in range(n):
        smaller_later = (arr[:, i + 1 :] < arr[:, i : i + 1]).sum(axis=1)
        ranks += smaller_later * math.factorial(n - 1 - i)
    return ranks


def _orbit_lengths(arr: np.ndarray) -> np.ndarray:
    m, n = arr.shape
    start = np.arange(n)
    cur = arr.copy()
    lengths = np.zeros((m, n), dtype=np.int64)
    for k in range(1, n + 1):
        hit = (cur == start) & (lengths == 0)
        lengths[hit] = k
        cur = np.take_along_axis(arr, cur, axis=1)
    return lengths


@cache
def _class_codes(n: int) -> tuple[np.ndarray, tuple[Partition, ...]]:
    classes = partitions_of(n)
    codes = np.array([sum(l * (n + 1) ** (l - 1) for l in c) for c in classes], dtype=np.int64)
    order = np.argsort(codes)
    return codes[order], tuple(classes[i] for i in order)


def class_indices(arr: np.ndarray) -> tuple[np.ndarray, tuple[Partition, ...]]:
    """Index of each row's cycle type in the returned class tuple."""
    n = arr.shape[1]
    lengths = _orbit_lengths(arr)
    codes = ((n + 1) ** (lengths - 1)).sum(axis=1)
    sorted_codes, classes = _class_codes(n)
    return np.searchsorted(sorted_codes, codes), classes


# ---------------------------------------------------------------------------
# class correlation (pair route)


def class_correlation(
    f: FunctionOnSn, g: FunctionOnSn, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> dict[Partition, Fraction]:
    """Σ_{σ,π : σπ⁻¹ ∈ c} f(σ) g(π), for every class c."""
    _same_space(f, g)
    n = f.n
    A, fnum, fden = f._integer_form
    B, gnum, gden = g._integer_form
    pairs = A.shape[0] * B.shape[0]
    if pairs > pair_budget:
        raise ResourceLimitError(
            f"{pairs} support pairs exceed the pair budget {pair_budget}"
        )
    _, classes = _class_codes(n)
    K = len(classes)
    totals = [0] * K
    if pairs == 0:
        return {c: Fraction(0) for c in classes}
    Binv = np.argsort(B, axis=1)
    fw = np.array(fnum, dtype=np.float64)
    exact_float = A.shape[0] * max(fnum) < 2**52
    chunk = max(1, 200_000 // max(1, A.shape[0]))
    for start in range(0, B.shape[0], chunk):
        inv_block = Binv[start : start + chunk]
        # rows: (π, σ) -> σ∘π⁻¹
        composed = A[:, inv_block].transpose(1, 0, 2).reshape(-1, n)
        idx, _ = class_indices(composed)
        idx = idx.reshape(inv_block.shape[0], A.shape[0])
        for j in range(inv_block.shape[0]):
            gw = gnum[start + j]
            if exact_float:
                sums = np.bincount(idx[j], weights=fw, minlength=K)
                for c in range(K):
                    if sums[c]:
                        totals[c] += int(sums[c]) * gw
            else:
                for c_idx, fv in zip(idx[j].tolist(), fnum):
                    totals[c_idx] += fv * gw
    den = fden * gden
    return {c: Fraction(totals[i], den) for i, c in enumerate(classes)}


def _pair_route(f: FunctionOnSn, g: FunctionOnSn, alphas: Iterable[Partition], budget: int):
    corr = class_correlation(f, g, budget)
    n = f.n
    scale = Fraction(1, math.factorial(n) ** 2)
    out = {}
    for alpha in alphas:
        chi = irreducible_character(alpha)
        out[alpha] = dimension_hook(alpha) * scale * sum(
            (chi(c) * v for c, v in corr.items()), Fraction(0)
        )
    return out


# ---------------------------------------------------------------------------
# tabloid route


@cache
def tabloids(beta: Partition) -> np.ndarray:
    """All β-tabloids as row-label vectors (label of each point)."""
    labels = [row for row, size in enumerate(beta) for _ in range(size)]
    uniq = sorted(set(itertools.permutations(labels)))
    return np.array(uniq, dtype=np.int64).reshape(-1, len(labels))


def tabloid_form(f: FunctionOnSn, g: FunctionOnSn, beta: Partition) -> Fraction:
    """Σ_{σ,π} f(σ) g(π) ξ_β(σπ⁻¹), computed as Σ_{T,T'} F_f(T,T') F_g(T,T')."""
    _same_space(f, g)
    n = f.n
    A, fnum, fden = f._integer_form
    B, gnum, gden = g._integer_form
    if not fnum or not gnum:
        return Fraction(0)
    Ainv = np.argsort(A, axis=1)
    Binv = np.argsort(B, axis=1)
    base = np.array([len(beta) ** k for k in range(n)], dtype=np.int64)
    total = 0
    for labels in tabloids(beta):
        fa = (labels[Ainv] * base).sum(axis=1)
        ga = (labels[Binv] * base).sum(axis=1)
        acc: dict[int, int] = {}
        for code, w in zip(fa.tolist(), fnum):
            acc[code] = acc.get(code, 0) + w
        for code, w in zip(ga.tolist(), gnum):
            if code in acc:
                total += acc[code] * w
    return Fraction(total, fden * gden)


def tabloid_cost(alpha: Partition, support_size: int) -> int:
    tot = 0
    for beta in determinantal_expansion(alpha):
        n = sum(beta)
        tot += math.factorial(n) // math.prod(math.factorial(b) for b in beta)
    return tot * support_size


def _tabloid_route(f: FunctionOnSn, g: FunctionOnSn, alpha: Partition) -> Fraction:
    n = f.n
    acc = Fraction(0)
    for beta, coef in determinantal_expansion(alpha).items():
        acc += coef * tabloid_form(f, g, beta)
    return dimension_hook(alpha) * acc / math.factorial(n) ** 2


# ---------------------------------------------------------------------------
# public projection API


def _check_dense(f: FunctionOnSn) -> None:
    if f.n > DENSE_MAX_N and len(f.values) > math.factorial(DENSE_MAX_N):
        raise ResourceLimitError(f"dense spectral computations are capped at n = {DENSE_MAX_N}")


def projection_inner(
    f: FunctionOnSn,
    g: FunctionOnSn,
    alpha: Sequence[int],
    route: str = "auto",
    pair_budget: int = DEFAULT_PAIR_BUDGET,
) -> Fraction:
    """⟨P_α f, P_α g⟩ via the bilinear form (f^α/(n!)²) Σ f(σ) g(π) χ_α(σπ⁻¹)."""
    _require_trivial(f, g)
    _check_dense(f)
    _check_dense(g)
    alpha = tuple(alpha)
    if sum(alpha) != f.n:
        raise ContractError("partition size does not match n")
    if route == "auto":
        pairs = len(f.values) * len(g.values)
        tab = tabloid_cost(alpha, len(f.values) + len(g.values))
        route = "tabloid" if tab < pairs or pairs > pair_budget else "pair"
    if route == "pair":
        return _pair_route(f, g, [alpha], pair_budget)[alpha]
    if route == "tabloid":
        return _tabloid_route(f, g, alpha)
    raise ValueError(f"unknown route {route!r}")


def projection_norm_sq(
    f: FunctionOnSn, alpha: Sequence[int], route: str = "auto", pair_budget: int = DEFAULT_PAIR_BUDGET
) -> Fraction:
    """‖P_α f‖²."""
    return projection_inner(f, f, alpha, route, pair_budget)


def bilinear_profile(
    f: FunctionOnSn, g: FunctionOnSn, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> dict[Partition, Fraction]:
    """⟨P_α f, P_α g⟩ for every α ⊢ n from one class correlation."""
    _require_trivial(f, g)
    _check_dense(f)
    _check_dense(g)
    return _pair_route(f, g, partitions_of(f.n), pair_budget)


@dataclass(frozen=True)
class SpectralProfile:
    n: int
    norms: dict[Partition, Fraction]
    mean: Fraction

    def total(self) -> Fraction:
        return sum(self.norms.values(), Fraction(0))


def spectral_profile(f: FunctionOnSn, pair_budget: int = DEFAULT_PAIR_BUDGET) -> SpectralProfile:
    norms = bilinear_profile(f, f, pair_budget)
    if any(v < 0 for v in norms.values()):
        raise ContractError("negative projection norm; character data is inconsistent")
    if sum(norms.values(), Fraction(0)) != f.norm_sq():
        raise ContractError("Parseval identity failed")
    return SpectralProfile(f.n, norms, f.mean())


# ---------------------------------------------------------------------------
# derangement operator


@cache
def _derangement_inverse_array(n: int) -> np.ndarray:
    ds = [inverse(d) for d in derangements(n)]
    return np.array(ds, dtype=np.int64).reshape(-1, n)


def apply_derangement_operator(f: FunctionOnSn) -> FunctionOnSn:
    """(Af)(σ) = (1/d_n) Σ_{δ ∈ D_n} f(σδ)."""
    _require_trivial(f)
    n = f.n
    if n > DENSE_MAX_N:
        raise ResourceLimitError(f"derangement operator is capped at n = {DENSE_MAX_N}")
    dn = derangement_count(n)
    if dn == 0:
        raise DegenerateInputError("S_1 has no derangements")
    A, nums, den = f._integer_form
    acc = np.zeros(math.factorial(n), dtype=object)
    Dinv = _derangement_inverse_array(n)
    for row, w in zip(A, nums):
        ranks = rank_permutations(row[Dinv])  # σ = π δ⁻¹
        acc[ranks] += w
    perms = all_permutations(n)
    values = {perms[i]: Fraction(int(acc[i]), den * dn) for i in np.nonzero(acc)[0]}
    return FunctionOnSn(n, values, bounded=False)


def cross_disagreement_pairing(
    f1: FunctionOnSn, f2: FunctionOnSn, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> Fraction:
    """⟨f1, A f2⟩: mass on pairs that disagree at every point."""
    _require_trivial(f1, f2)
    _same_space(f1, f2)
    n = f1.n
    dn = derangement_count(n)
    if dn == 0:
        return Fraction(0)
    A, n1, d1 = f1._integer_form
    B, n2, d2 = f2._integer_form
    if A.shape[0] * B.shape[0] > pair_budget:
        raise ResourceLimitError("support pairs exceed the pair budget")
    total = 0
    if A.shape[0] and B.shape[0]:
        w2 = np.array(n2, dtype=object)
        for start in range(0, A.shape[0], 256):
            block = A[start : start + 256]
            disjoint = ~(block[:, None, :] == B[None, :, :]).any(axis=2)
            for i, row in enumerate(disjoint):
                if row.any():
                    total += n1[start + i] * int(w2[row].sum())
    return Fraction(total, d1 * d2 * math.factorial(n) * dn)


# ---------------------------------------------------------------------------
# algebraic quasirandomness and the spectral balance


@dataclass(frozen=True)
class AlgebraicQuasirandomReport:
    r: int
    epsilon: Fraction
    verdict: bool
    ratios: dict[Partition, Fraction]
    witness: Partition | None
    attained: Fraction


def is_algebraically_quasirandom(
    f: FunctionOnSn, r: int, epsilon: Fraction | int, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> AlgebraicQuasirandomReport:
    """‖P_α f‖² ≤ ε f^α (E f)² for every non-trivial α with first row ≥ n − r."""
    eps = Fraction(epsilon)
    mean = f.mean()
    if mean == 0:
        raise DegenerateInputError("E[f] = 0")
    ratios = {}
    for alpha in nontrivial_largest_part_at_least(f.n, f.n - r):
        norm = projection_norm_sq(f, alpha, pair_budget=pair_budget)
        ratios[alpha] = norm / (dimension_hook(alpha) * mean * mean)
    worst = max(ratios, key=lambda a: (ratios[a], a), default=None)
    attained = ratios[worst] if worst is not None else Fraction(0)
    verdict = attained <= eps
    return AlgebraicQuasirandomReport(r, eps, verdict, ratios, None if verdict else worst, attained)


@dataclass(frozen=True)
class SpectralBalanceReport:
    n: int
    r: int
    mean_product: Fraction
    high_block: Fraction
    low_block: Fraction
    terms: dict[Partition, Fraction]
    abs_sum: Fraction
    norm_product_sq: Fraction
    low_eigen_max: Fraction

    @property
    def balanced(self) -> bool:
        return self.mean_product + self.high_block + self.low_block == 0

    @property
    def cauchy_schwarz_ok(self) -> bool:
        # Σ|⟨P f1, P f2⟩| ≤ ‖f1‖‖f2‖ ≤ sqrt(E f1 E f2)
        return (
            self.abs_sum * self.abs_sum <= self.norm_product_sq
            and self.norm_product_sq <= self.mean_product
        )

    @property
    def low_block_ok(self) -> bool:
        bound_sq = self.low_eigen_max**2 * self.mean_product
        return self.low_block * self.low_block <= bound_sq

    @property
    def ok(self) -> bool:
        return self.balanced and self.cauchy_schwarz_ok and self.low_block_ok


def verify_spectral_gap_argument(
    f1: FunctionOnSn, f2: FunctionOnSn, r: int, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> SpectralBalanceReport:
    """Exact expansion 0 = E f1 E f2 + Σ_{α ≠ (n)} λ_α ⟨P_α f1, P_α f2⟩ for a disagreement-free pair."""
    pairing = cross_disagreement_pairing(f1, f2, pair_budget)
    if pairing != 0:
        raise ContractError(f"pair carries disagreeing mass: <f1, A f2> = {pairing}")
    n = f1.n
    inner = bilinear_profile(f1, f2, pair_budget)
    high_shapes = set(nontrivial_largest_part_at_least(n, n - r))
    low_shapes = set(largest_part_below(n, n - r))
    terms = {alpha: derangement_eigenvalue(alpha) * inner[alpha] for alpha in inner}
    high = sum((terms[a] for a in high_shapes), Fraction(0))
    low = sum((terms[a] for a in low_shapes), Fraction(0))
    abs_sum = sum((abs(v) for v in inner.values()), Fraction(0))
    low_max = max((abs(derangement_eigenvalue(a)) for a in low_shapes), default=Fraction(0))
    return SpectralBalanceReport(
        n,
        r,
        f1.mean() * f2.mean(),
        high,
        low,
        terms,
        abs_sum,
        f1.norm_sq() * f2.norm_sq(),
        low_max,
    )

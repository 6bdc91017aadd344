"""Combinatorial pseudorandomness: captureability, quasiregularity, quasirandomness.

Every checker is exhaustive.  Candidate bijections are scanned in the order
(size, sorted domain, images), so witnesses are deterministic.  Counting is
vectorised: for a batch of candidates the members agreeing (or disagreeing
everywhere) with each candidate are found with one broadcast comparison, and
ambient sizes come from closed forms or rook polynomials.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from permjunta.errors import (
    ContractError,
    DegenerateInputError,
    ExistenceFailureError,
    InfeasibleClassError,
    InvariantViolation,
)
from permjunta.exact import Surd, Threshold, compare, format_fraction, ge, threshold_str
from permjunta.gates import GateLog
from permjunta.perm import (
    EMPTY,
    PartialBijection,
    PermFamily,
    RestrictionClass,
    bijection_arrays,
    count_completions,
)
from permjunta.rep_theory import (
    determinantal_expansion,
    dimension_hook,
    nontrivial_largest_part_at_least,
)
from permjunta.spectral import FunctionOnSn, projection_norm_sq

Weighted = Union[PermFamily, FunctionOnSn]

# members x candidates x size cells compared per batch
BATCH_CELLS = 20_000_000


# ---------------------------------------------------------------------------
# weighted supports and batched counting


@dataclass(frozen=True)
class _Support:
    ambient: RestrictionClass
    arr: np.ndarray
    nums: np.ndarray
    den: int
    mass: int

    @property
    def n(self) -> int:
        return self.ambient.n


def _support(obj: Weighted) -> _Support:
    if isinstance(obj, PermFamily):
        arr = obj.array.astype(np.int64)
        nums = np.ones(arr.shape[0], dtype=np.int64)
        return _Support(obj.ambient, arr, nums, 1, arr.shape[0])
    if isinstance(obj, FunctionOnSn):
        arr, nums, den = obj._integer_form
        big = max(nums, default=0) * max(len(nums), 1) >= 2**62
        vec = np.array(nums, dtype=object if big else np.int64)
        return _Support(obj.ambient, arr, vec, den, sum(nums))
    raise TypeError(f"expected a family or a function, got {type(obj).__name__}")


def _masses(sup: _Support, D: np.ndarray, I: np.ndarray, agree: bool) -> list[int]:
    """Weighted count of members agreeing with (or disjoint from) each candidate."""
    K, k = D.shape
    m = sup.arr.shape[0]
    if m == 0:
        return [0] * K
    if k == 0:
        return [sup.mass] * K
    eq = sup.arr[:, D] == I[None, :, :]
    hit = eq.all(axis=2) if agree else ~eq.any(axis=2)
    return [int(v) for v in sup.nums @ hit]


def _ambient_sizes(amb: RestrictionClass, D: np.ndarray, I: np.ndarray, agree: bool) -> list[int]:
    K, k = D.shape
    free = len(amb.free_points)
    if not amb.effective_forbidden:
        if agree:
            value = math.factorial(free - k)
        else:
            value = sum((-1) ** j * math.comb(k, j) * math.factorial(free - j) for j in range(k + 1))
        return [value] * K
    fixed = amb.fixed.mapping
    out = []
    for dom, img in zip(D.tolist(), I.tolist()):
        if agree:
            fx = dict(fixed)
            fx.update(zip(dom, img))
            out.append(count_completions(amb.n, fx, amb.forbidden))
        else:
            out.append(count_completions(amb.n, fixed, amb.forbidden | set(zip(dom, img))))
    return out


def _batches(sup: _Support, size: int, threads: int, agree: bool):
    """Yield (D, I, masses, ambient sizes) batch by batch over all size-``size`` candidates."""
    amb = sup.ambient
    D, I = bijection_arrays(amb.free_points, amb.free_values, size)
    K = D.shape[0]
    if K == 0:
        return
    per = max(1, BATCH_CELLS // max(1, sup.arr.shape[0] * max(size, 1)))
    slices = [(a, min(K, a + per)) for a in range(0, K, per)]

    def work(sl):
        d, i = D[sl[0] : sl[1]], I[sl[0] : sl[1]]
        return d, i, _masses(sup, d, i, agree), _ambient_sizes(amb, d, i, agree)

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map preserves order, so the reduction stays deterministic
            window = threads * 2
            for start in range(0, len(slices), window):
                yield from pool.map(work, slices[start : start + window])
    else:
        for sl in slices:
            yield work(sl)


def _bijection(dom: Sequence[int], img: Sequence[int]) -> PartialBijection:
    return PartialBijection(tuple(zip((int(x) for x in dom), (int(y) for y in img))))


def measure_avoiding(obj: Weighted, pi: PartialBijection) -> Fraction:
    """μ(F(…, π̄)): measure inside the ambient further restricted to disagree with π."""
    sup = _support(obj)
    amb = sup.ambient.extend(disagree=[pi])
    size = amb.size()
    if size == 0:
        raise InfeasibleClassError(f"{amb} is empty")
    hit = sum(
        int(w) for p, w in zip(sup.arr.tolist(), sup.nums.tolist()) if pi.disagrees_with(p)
    )
    return Fraction(hit, sup.den * size)


def measure_extending(obj: Weighted, pi: PartialBijection) -> Fraction:
    """μ(F(…, π)), or E[f(π)] for a function."""
    sup = _support(obj)
    amb = sup.ambient.extend(agree=[pi])
    size = amb.size()
    if size == 0:
        raise InfeasibleClassError(f"{amb} is empty")
    hit = sum(int(w) for p, w in zip(sup.arr.tolist(), sup.nums.tolist()) if pi.agrees_with(p))
    return Fraction(hit, sup.den * size)


def mean_of(obj: Weighted) -> Fraction:
    sup = _support(obj)
    size = sup.ambient.size()
    if size == 0:
        raise InfeasibleClassError(f"ambient {sup.ambient} is empty")
    return Fraction(sup.mass, sup.den * size)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class PseudorandomnessReport:
    """Outcome of one exhaustive check.

    ``verdict`` says whether the named property holds: for kind "captureable"
    True means captured, for the other kinds True means the family passed.
    """

    kind: str
    size: int
    threshold: Threshold
    verdict: bool
    witness: PartialBijection | None
    attained: Fraction
    attained_at: PartialBijection | None = None
    candidates: int = 0

    @property
    def pseudorandom(self) -> bool:
        return not self.verdict if self.kind == "captureable" else self.verdict

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "size": self.size,
            "threshold": threshold_str(self.threshold),
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_json(),
            "attained": format_fraction(self.attained),
            "attained_at": None if self.attained_at is None else self.attained_at.to_json(),
            "candidates": self.candidates,
        }

    def summary(self) -> str:
        w = "" if self.witness is None else f" witness {self.witness}"
        return (
            f"{self.kind}(size {self.size}, threshold {threshold_str(self.threshold)}): "
            f"{self.verdict}, attained {format_fraction(self.attained)}{w}"
        )


# ---------------------------------------------------------------------------
# the three checkers


def check_captureable(
    F: Weighted, s: int, epsilon: Fraction | int | str, threads: int = 1
) -> PseudorandomnessReport:
    """Is there π of size ≤ s, on unconstrained points, with μ(F(…, π̄)) ≤ ε?"""
    eps = Fraction(epsilon)
    sup = _support(F)
    free = min(len(sup.ambient.free_points), len(sup.ambient.free_values))
    if s < 0 or s > free:
        raise ContractError(f"capture size {s} exceeds the {free} unconstrained points")
    best: tuple[Fraction, PartialBijection] | None = None
    seen = 0
    for size in range(s + 1):
        for D, I, masses, sizes in _batches(sup, size, threads, agree=False):
            for j, (mass, amb) in enumerate(zip(masses, sizes)):
                if amb == 0:
                    continue
                seen += 1
                mu = Fraction(mass, sup.den * amb)
                if best is None or mu < best[0]:
                    best = (mu, _bijection(D[j], I[j]))
                if mu <= eps:
                    pi = _bijection(D[j], I[j])
                    return PseudorandomnessReport("captureable", s, eps, True, pi, mu, pi, seen)
    if best is None:
        raise DegenerateInputError(f"ambient {sup.ambient} is empty")
    return PseudorandomnessReport("captureable", s, eps, False, None, best[0], best[1], seen)


def check_quasiregular(
    F: Weighted,
    s: int,
    alpha: Fraction | int | str | Surd,
    threads: int = 1,
    witness: str = "worst",
) -> PseudorandomnessReport:
    """No size-s bijection π on unconstrained points boosts the measure by a factor ≥ α.

    ``witness="worst"`` reports the largest ratio; ``"first"`` stops at the
    first violating candidate in scan order (used by the density-increment loops).
    """
    thr: Threshold = alpha if isinstance(alpha, Surd) else Fraction(alpha)
    sup = _support(F)
    if sup.mass == 0:
        raise DegenerateInputError("the family has measure 0")
    total = sup.ambient.size()
    worst: tuple[Fraction, PartialBijection] | None = None
    seen = 0
    for D, I, masses, sizes in _batches(sup, s, threads, agree=True):
        for j, (mass, amb) in enumerate(zip(masses, sizes)):
            if amb == 0:
                continue
            seen += 1
            ratio = Fraction(mass * total, amb * sup.mass)
            if witness == "first" and ge(ratio, thr):
                pi = _bijection(D[j], I[j])
                return PseudorandomnessReport("quasiregular", s, thr, False, pi, ratio, pi, seen)
            if worst is None or ratio > worst[0]:
                worst = (ratio, _bijection(D[j], I[j]))
    if worst is None:
        return PseudorandomnessReport("quasiregular", s, thr, True, None, Fraction(0), None, 0)
    ok = not ge(worst[0], thr)
    return PseudorandomnessReport(
        "quasiregular", s, thr, ok, None if ok else worst[1], worst[0], worst[1], seen
    )


@dataclass(frozen=True)
class _Variance:
    ratio: Fraction
    variance: Fraction
    extreme: PartialBijection | None
    count: int


def _restricted_variance(f: Weighted, r: int, threads: int = 1) -> _Variance:
    """Var over uniform size-r bijections of E[f(π)], exactly, and its ratio to (E f)²."""
    sup = _support(f)
    if not sup.ambient.is_trivial():
        raise ContractError("quasirandomness is defined for functions on all of S_n")
    n = sup.n
    if not 0 <= r <= n:
        raise ContractError(f"restriction size {r} outside 0..{n}")
    if sup.mass == 0:
        raise DegenerateInputError("E[f] = 0")
    scale = math.perm(n, r)  # n!/(n-r)!
    total_sq = 0
    count = 0
    extreme: tuple[int, PartialBijection] | None = None
    for D, I, masses, _ in _batches(sup, r, threads, agree=True):
        for j, mass in enumerate(masses):
            dev = mass * scale - sup.mass
            total_sq += dev * dev
            count += 1
            if extreme is None or abs(dev) > extreme[0]:
                extreme = (abs(dev), _bijection(D[j], I[j]))
    ratio = Fraction(total_sq, count * sup.mass * sup.mass)
    mean = Fraction(sup.mass, sup.den * math.factorial(n))
    return _Variance(ratio, ratio * mean * mean, None if extreme is None else extreme[1], count)


def restricted_variance(f: Weighted, r: int) -> Fraction:
    """E_π (E[f(π)] − E[f])² over a uniform bijection between r-subsets."""
    return _restricted_variance(f, r).variance


def check_quasirandom(
    f: Weighted, r: int, epsilon: Fraction | int | str, threads: int = 1
) -> PseudorandomnessReport:
    eps = Fraction(epsilon)
    v = _restricted_variance(f, r, threads)
    ok = v.ratio <= eps
    return PseudorandomnessReport(
        "quasirandom", r, eps, ok, None if ok else v.extreme, v.ratio, v.extreme, v.count
    )


# ---------------------------------------------------------------------------
# implications, machine-checked per instance


@dataclass(frozen=True)
class ImplicationReport:
    name: str
    passed: bool
    premise: tuple[PseudorandomnessReport, ...]
    conclusion: tuple[PseudorandomnessReport, ...]
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "premise": [p.to_json() for p in self.premise],
            "conclusion": [c.to_json() for c in self.conclusion],
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_fraction(v)
    if isinstance(v, Surd):
        return str(v)
    if isinstance(v, PartialBijection):
        return v.to_json()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _weak_premise(F: Weighted, size: int, thr: Threshold) -> PseudorandomnessReport:
    """Quasiregularity premise in the non-strict form "no ratio exceeds thr".

    The implication arguments only use the upper bound ratio <= thr, so
    instances sitting exactly on the threshold are admitted as well.
    """
    rep = check_quasiregular(F, size, thr)
    if compare(rep.attained, thr) > 0:
        raise ContractError(
            f"premise fails: ratio {format_fraction(rep.attained)} at {rep.attained_at} "
            f"exceeds {threshold_str(thr)}"
        )
    return rep


def quasiregular_implies_quasirandom_check(
    f: Weighted, s: int, epsilon: Fraction | int | str
) -> ImplicationReport:
    """(s, 1+ε)-quasiregular f with values in [0,1] is (s, 2ε+ε²)-quasirandom."""
    eps = Fraction(epsilon)
    if not 0 <= eps < 1:
        raise ContractError(f"epsilon = {eps} outside [0, 1)")
    if isinstance(f, FunctionOnSn) and not f.bounded:
        raise ContractError("values must lie in [0, 1]")
    premise = _weak_premise(f, s, 1 + eps)
    conclusion = check_quasirandom(f, s, 2 * eps + eps * eps)
    return ImplicationReport(
        "quasiregular-to-quasirandom", conclusion.verdict, (premise,), (conclusion,), {"epsilon": eps}
    )


def quasiregular_implies_uncaptureable_check(
    H: Weighted,
    beta: Fraction | int | str | Surd,
    delta: Fraction | int | str,
    N: int,
    b: int | None = None,
) -> ImplicationReport:
    """(1, β)-quasiregular with μ > δ and 2βN ≤ n − b gives (N, δ/2)-uncaptureable."""
    thr: Threshold = beta if isinstance(beta, Surd) else Fraction(beta)
    dl = Fraction(delta)
    sup = _support(H)
    b = constraint_size(sup.ambient) if b is None else b
    if b < constraint_size(sup.ambient):
        raise ContractError(f"b = {b} is below the ambient constraint size")
    if compare(1, thr) >= 0:
        raise ContractError(f"beta = {threshold_str(thr)} must exceed 1")
    if compare(sup.n - b, 2 * N * Surd.of(thr)) < 0:
        raise ContractError(f"2*beta*N > n - b for N = {N}, n = {sup.n}, b = {b}")
    mu = mean_of(H)
    if mu <= dl:
        raise ContractError(f"measure {format_fraction(mu)} does not exceed delta")
    premise = _weak_premise(H, 1, thr)
    conclusion = check_captureable(H, N, dl / 2)
    return ImplicationReport(
        "quasiregular-to-uncaptureable",
        not conclusion.verdict,
        (premise,),
        (conclusion,),
        {"measure": mu, "beta": thr, "delta": dl, "N": N, "b": b},
    )


def constraint_size(amb: RestrictionClass) -> int:
    """|Dom(agree part)| + |Dom(disagree part)|."""
    return len(amb.fixed) + len(amb.forbidden)


def restrict_disagree_preserves(
    H: PermFamily,
    pi: PartialBijection,
    alpha: Fraction | int | str | Surd,
    mode: str = "single-point",
    s: int = 1,
    b: int | None = None,
) -> ImplicationReport:
    """Restricting a quasiregular family to disagree with a small π keeps it quasiregular.

    ``mode="single-point"``: (1, α) becomes (1, 2α) and at least half the
    measure survives; requires 1 ≤ α ≤ (n − b)/(4|π|).
    ``mode="small-error"``: (s, α) becomes (s, (1 + 4/√(n−b))α) and a
    (1 − 2/√(n−b)) fraction survives; requires 1 ≤ α ≤ 2 and n ≥ |π|² + b.
    """
    thr: Threshold = alpha if isinstance(alpha, Surd) else Fraction(alpha)
    amb = H.ambient
    n = amb.n
    b = constraint_size(amb) if b is None else b
    if b < constraint_size(amb):
        raise ContractError(f"b = {b} is below the ambient constraint size")
    r = len(pi)
    if compare(1, thr) > 0:
        raise ContractError("alpha must be at least 1")
    for x, y in pi:
        if amb.fixed.mapping.get(x) == y:
            raise ContractError(f"{x + 1}->{y + 1} is a required pair of the ambient")
    if mode == "single-point":
        if r and compare(Fraction(n - b, 4 * r), thr) < 0:
            raise ContractError(f"alpha exceeds (n - b)/(4r) = {format_fraction(Fraction(n - b, 4 * r))}")
        size, after_thr = 1, Surd.of(thr) * 2
        retention_thr: Threshold = Fraction(1, 2)
    elif mode == "small-error":
        if compare(2, thr) < 0:
            raise ContractError("alpha must be at most 2")
        if n < r * r + b:
            raise ContractError(f"n = {n} < r^2 + b = {r * r + b}")
        size = s
        a = Surd.of(thr)
        if not a.is_rational():
            raise ContractError("small-error mode needs a rational alpha")
        m = n - b
        after_thr = Surd(a.a, 4 * a.a / m, m)
        retention_thr = Surd(1, Fraction(-2, m), m)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    premise = _weak_premise(H, size, thr)
    restricted = H.restrict(disagree=[pi])
    before = H.measure()
    after = restricted.measure()
    retention = after / before
    kept = ge(retention, retention_thr)
    conclusion = check_quasiregular(restricted, size, after_thr) if after else None
    regular = conclusion is not None and conclusion.verdict
    return ImplicationReport(
        f"disagree-restriction ({mode})",
        kept and regular,
        (premise,),
        () if conclusion is None else (conclusion,),
        {
            "retention": retention,
            "retention_threshold": retention_thr,
            "ratio_after": Fraction(0) if conclusion is None else conclusion.attained,
            "threshold_after": after_thr,
            "b": b,
            "r": r,
        },
    )


@dataclass(frozen=True)
class AlgebraicBoundReport:
    r: int
    epsilon: Fraction
    variances: tuple[Fraction, ...]
    rows: tuple[dict, ...]
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def quasirandom_implies_algebraic_check(f: FunctionOnSn, r: int) -> AlgebraicBoundReport:
    """Check ‖P_α f‖² ≤ f^α Σ_β |c_β| Var_{n−β₁}(f) and the weaker ε-form, for α in L*(≥ n−r).

    ε is the smallest value making f (s', ε)-quasirandom for every s' ≤ r,
    and c_β are the determinantal coefficients of χ_α.
    """
    n = f.n
    mean = f.mean()
    if mean == 0:
        raise DegenerateInputError("E[f] = 0")
    variances = tuple(restricted_variance(f, k) for k in range(r + 1))
    eps = max(v / (mean * mean) for v in variances)
    rows = []
    ok = True
    for alpha in nontrivial_largest_part_at_least(n, n - r):
        dim = dimension_hook(alpha)
        coeffs = determinantal_expansion(alpha)
        weight = sum(abs(c) for c in coeffs.values())
        strong = dim * sum(
            (abs(c) * variances[n - beta[0]] for beta, c in coeffs.items()), Fraction(0)
        )
        stated = weight * eps * dim * mean * mean
        norm = projection_norm_sq(f, alpha)
        row_ok = norm <= strong <= stated
        ok = ok and row_ok
        rows.append(
            {"alpha": alpha, "norm_sq": norm, "strong_bound": strong, "bound": stated,
             "coefficient_weight": weight, "ok": row_ok}
        )
    return AlgebraicBoundReport(r, eps, variances, tuple(rows), ok)


# ---------------------------------------------------------------------------
# density-increment bootstraps


@dataclass(frozen=True)
class BootstrapResult:
    pi3: PartialBijection
    pi4: PartialBijection
    F1: PermFamily
    F2: PermFamily
    gates: GateLog
    postconditions: dict[str, bool]
    steps: tuple[PartialBijection, ...]

    @property
    def ok(self) -> bool:
        return all(self.postconditions.values())

    def lines(self) -> list[str]:
        out = self.gates.lines()
        out += [f"post {k}: {'pass' if v else 'FAIL'}" for k, v in self.postconditions.items()]
        return out


def _validate_blocking(F1: PermFamily, F2: PermFamily) -> None:
    """π₁'s pairs off π₂'s support must be forbidden for F2, and vice versa."""
    for A, B, label in ((F1, F2, "first"), (F2, F1, "second")):
        pa, pb = A.ambient.fixed, B.ambient.fixed
        for x, y in pa:
            if x in pb.mapping or y in pb.range:
                continue
            if (x, y) not in B.ambient.forbidden:
                raise ContractError(
                    f"required pair {x + 1}->{y + 1} of the {label} family is not forbidden in the other"
                )


def _common_checks(F1: PermFamily, F2: PermFamily) -> int:
    if F1.n != F2.n:
        raise ContractError("families live on different ground sets")
    _validate_blocking(F1, F2)
    return max(constraint_size(F1.ambient), constraint_size(F2.ambient))


def _require_uncaptureable(F: PermFamily, s: int, eps: Fraction, label: str) -> None:
    free = min(len(F.ambient.free_points), len(F.ambient.free_values))
    rep = check_captureable(F, min(s, free), eps)
    if rep.verdict:
        raise ContractError(
            f"{label} family is captureable by {rep.witness} "
            f"(measure {format_fraction(rep.attained)} <= {format_fraction(eps)})"
        )


def _increment(
    F: PermFamily, size: int, thr: Threshold, cap_check
) -> tuple[PartialBijection, PermFamily, list[PartialBijection]]:
    """Extend by lex-least violating size-``size`` bijections until (size, thr)-quasiregular."""
    ext = EMPTY
    cur = F
    steps = []
    while True:
        rep = check_quasiregular(cur, size, thr, witness="first")
        if rep.verdict:
            return ext, cur, steps
        step = rep.witness
        assert step is not None
        steps.append(step)
        ext = ext.union(step)
        cur = F.restrict(agree=[ext])
        cap_check(len(steps), cur)


def _agreement_preserved(F1: PermFamily, F2: PermFamily, pi3, pi4) -> bool:
    p1, p2 = F1.ambient.fixed, F2.ambient.fixed
    return len(p1.union(pi3).intersection(p2.union(pi4))) == len(p1.intersection(p2))


def _disjoint(a: PartialBijection, b: PartialBijection) -> bool:
    return not (set(a.domain) & set(b.domain)) and not (a.range & b.range)


def _bootstrap(
    F1: PermFamily,
    F2: PermFamily,
    size: int,
    thr: Threshold,
    floor: Fraction,
    gates: GateLog,
    step_limit,
) -> tuple:
    pi3, _, steps3 = _increment(F1, size, thr, step_limit)
    G2 = F2.restrict(disagree=[pi3])
    mu2 = G2.measure()
    if mu2 == 0:
        raise ContractError(f"second family vanishes after avoiding {pi3}")
    if not mu2 > floor and gates.all_satisfied:
        raise InvariantViolation(f"second family dropped to {mu2} after avoiding {pi3}")
    pi4, _, steps4 = _increment(G2, size, thr, step_limit)
    try:
        out1 = F1.restrict(agree=[pi3], disagree=[pi4])
        out2 = F2.restrict(agree=[pi4], disagree=[pi3])
    except InfeasibleClassError as exc:
        raise InvariantViolation(f"extensions conflict: {exc}") from exc
    return pi3, pi4, out1, out2, tuple(steps3 + steps4)


def bootstrap_uncap_to_quasiregular(
    F1: PermFamily, F2: PermFamily, r: int, s: int, enforce: bool = True
) -> BootstrapResult:
    """Density increment turning (s, n^-r)-uncaptureable families into (1, 2√n)-quasiregular ones."""
    n = F1.n
    b = _common_checks(F1, F2)
    if s < 2 * r - 1:
        raise ContractError(f"s = {s} is below 2r - 1 = {2 * r - 1}")
    gates = GateLog(enforce)
    gates.require(
        "size", compare(n - 2 * r - b, Surd.sqrt(n, 8 * r)) >= 0, f"n >= 8r*sqrt(n) + 2r + b with b = {b}"
    )
    floor = Fraction(1, n**r)
    _require_uncaptureable(F1, s, floor, "first")
    _require_uncaptureable(F2, s, floor, "second")
    alpha = Surd.sqrt(n)

    def limit(steps, cur):
        if steps >= 2 * r:
            raise InvariantViolation(f"{steps} increments; measure {cur.measure()} would exceed 1")

    pi3, pi4, out1, out2, steps = _bootstrap(F1, F2, 1, alpha, floor, gates, limit)
    half = floor / 2
    post = {
        "extension sizes < 2r": len(pi3) < 2 * r and len(pi4) < 2 * r,
        "first (1, 2sqrt(n))-quasiregular": out1.measure() > 0
        and check_quasiregular(out1, 1, alpha * 2).verdict,
        "second (1, 2sqrt(n))-quasiregular": out2.measure() > 0
        and check_quasiregular(out2, 1, alpha * 2).verdict,
        "first measure > n^-r/2": out1.measure() > half,
        "second measure > n^-r/2": out2.measure() > half,
        "pi1, pi3 disjoint": _disjoint(F1.ambient.fixed, pi3),
        "pi2, pi4 disjoint": _disjoint(F2.ambient.fixed, pi4),
        "agreement count preserved": _agreement_preserved(F1, F2, pi3, pi4),
    }
    _finish(post, gates)
    return BootstrapResult(pi3, pi4, out1, out2, gates, post, steps)


def _finish(post: dict[str, bool], gates: GateLog) -> None:
    failed = [k for k, v in post.items() if not v]
    if failed and gates.all_satisfied:
        raise InvariantViolation("post-conditions failed with all gates satisfied: " + ", ".join(failed))


def increment_budget(n: int, r: int, s: int, epsilon: Fraction, c: Fraction) -> float:
    """b' = (r log n − log c) s / log(1 + ε)."""
    return (r * math.log(n) - math.log(c)) * s / math.log1p(float(epsilon))


def bootstrap_uncap_to_s_quasiregular(
    F1: PermFamily,
    F2: PermFamily,
    r: int,
    s: int,
    epsilon: Fraction | int | str,
    N: int,
    c: Fraction | int | str,
    enforce: bool = True,
) -> BootstrapResult:
    """Density increment with size-s extensions, reaching (s, 1+2ε)-quasiregularity."""
    eps, cc = Fraction(epsilon), Fraction(c)
    n = F1.n
    if not 0 < eps < 1:
        raise ContractError(f"epsilon = {eps} outside (0, 1)")
    if cc <= 0:
        raise ContractError("c must be positive")
    b = _common_checks(F1, F2)
    bp = increment_budget(n, r, s, eps, cc)
    gates = GateLog(enforce)
    gates.require("budget", N >= bp, f"N = {N} >= b' = {bp:.3f}")
    room = n - b - bp
    gates.require(
        "epsilon", room > 0 and float(eps) >= 8 / math.sqrt(room), f"epsilon >= 8/sqrt(n - b - b') with b = {b}"
    )
    gates.require("size", n >= bp * bp + bp + b, f"n >= b'^2 + b' + b = {bp * bp + bp + b:.3f}")
    floor = cc / n**r
    _require_uncaptureable(F1, N, floor, "first")
    _require_uncaptureable(F2, N, floor, "second")

    def limit(steps, cur):
        if (1 + eps) ** steps * floor >= 1:
            raise InvariantViolation(f"{steps} increments; measure {cur.measure()} would exceed 1")

    pi3, pi4, out1, out2, steps = _bootstrap(F1, F2, s, 1 + eps, floor, gates, limit)
    thr = 1 + 2 * eps
    half = floor / 2
    post = {
        "extension sizes < b'": len(pi3) < bp and len(pi4) < bp,
        "first (s, 1+2eps)-quasiregular": out1.measure() > 0 and check_quasiregular(out1, s, thr).verdict,
        "second (s, 1+2eps)-quasiregular": out2.measure() > 0 and check_quasiregular(out2, s, thr).verdict,
        "first measure > c n^-r/2": out1.measure() > half,
        "second measure > c n^-r/2": out2.measure() > half,
        "pi1, pi3 disjoint": _disjoint(F1.ambient.fixed, pi3),
        "pi2, pi4 disjoint": _disjoint(F2.ambient.fixed, pi4),
        "agreement count preserved": _agreement_preserved(F1, F2, pi3, pi4),
    }
    _finish(post, gates)
    return BootstrapResult(pi3, pi4, out1, out2, gates, post, steps)


# ---------------------------------------------------------------------------
# extra agreements


@dataclass(frozen=True)
class ExtraAgreementResult:
    pi: PartialBijection
    base_domain: tuple[int, ...]
    retention: tuple[Fraction, Fraction]
    regularity: tuple[PseudorandomnessReport, PseudorandomnessReport]
    gates: GateLog
    searched: int


def good_extensions(H1: PermFamily, H2: PermFamily, t: int) -> tuple[tuple[int, ...], list[PartialBijection]]:
    """The base domain S₀ and all good bijections on it, in lexicographic order."""
    n = H1.n
    used_dom: set[int] = set()
    used_rng: set[int] = set()
    for H in (H1, H2):
        used_dom |= set(H.ambient.fixed.domain) | {x for x, _ in H.ambient.forbidden}
        used_rng |= set(H.ambient.fixed.range) | {y for _, y in H.ambient.forbidden}
    dom_pool = [x for x in range(n) if x not in used_dom]
    if len(dom_pool) < t:
        raise ContractError(f"only {len(dom_pool)} points avoid every constraint domain; need {t}")
    base = tuple(dom_pool[:t])
    rng_pool = [y for y in range(n) if y not in used_rng]
    D, I = bijection_arrays(base, rng_pool, t)
    return base, [_bijection(d, i) for d, i in zip(D, I)]


def find_extra_agreements(
    H1: PermFamily,
    H2: PermFamily,
    t: int,
    s: int,
    epsilon: Fraction | int | str,
    c0: Fraction | int | str = 1,
    b: int | None = None,
    enforce: bool = True,
) -> ExtraAgreementResult:
    """First good size-t bijection π keeping a (1 − 4ε) share of both measures."""
    eps, c0 = Fraction(epsilon), Fraction(c0)
    n = H1.n
    if H2.n != n:
        raise ContractError("families live on different ground sets")
    if not 1 <= t <= s:
        raise ContractError(f"need 1 <= t <= s, got t = {t}, s = {s}")
    if not 0 <= eps < Fraction(3, 32):
        raise ContractError(f"epsilon = {eps} outside [0, 3/32)")
    actual_b = max(
        max(len(H.ambient.fixed), len(H.ambient.forbidden)) for H in (H1, H2)
    )
    b = actual_b if b is None else b
    if b < actual_b:
        raise ContractError(f"b = {b} is below the actual constraint size {actual_b}")
    gates = GateLog(enforce)
    gates.require("epsilon", eps >= c0 * b * t / n, f"epsilon >= c0*b*t/n = {format_fraction(c0 * b * t / n)}")
    for H, label in ((H1, "first"), (H2, "second")):
        rep = check_quasiregular(H, s, 1 + eps)
        if not rep.verdict:
            raise ContractError(f"{label} family is not (s, 1+eps)-quasiregular: {rep.summary()}")
    mu1, mu2 = H1.measure(), H2.measure()
    keep = 1 - 4 * eps
    base, candidates = good_extensions(H1, H2, t)
    for count, pi in enumerate(candidates, start=1):
        R1, R2 = H1.restrict(agree=[pi]), H2.restrict(agree=[pi])
        if R1.ambient.size() == 0 or R2.ambient.size() == 0:
            continue
        m1, m2 = R1.measure(), R2.measure()
        # keep > 0, so passing both tests forces positive measures
        if m1 >= keep * mu1 and m2 >= keep * mu2:
            thr = 1 + 8 * eps
            regs = (check_quasiregular(R1, s - t, thr), check_quasiregular(R2, s - t, thr))
            if not all(x.verdict for x in regs):
                raise InvariantViolation(f"restriction to {pi} is not (s - t, 1 + 8eps)-quasiregular")
            return ExtraAgreementResult(pi, base, (m1 / mu1, m2 / mu2), regs, gates, count)
    raise ExistenceFailureError(
        f"no good bijection on {[x + 1 for x in base]} keeps both measures; "
        "the hypotheses are likely violated at this n"
    )


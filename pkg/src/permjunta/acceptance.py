"""The acceptance suite: ten criteria, each run at its stated tolerance and time limit."""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from permjunta.corpus import SURGERY_CORPUS, random_family, star, structured_families
from permjunta.errors import ContractError
from permjunta.extremal import (
    build_agreement_graph,
    count_agreeing_in_star,
    diagonalized_spectrum,
    predicted_spectrum,
    search_extremal,
)
from permjunta.perm import (
    PartialBijection,
    PermFamily,
    RestrictionClass,
    all_permutations,
    derangements,
    is_intersection_free,
    sign,
)
from permjunta.pseudorandom import (
    check_quasiregular,
    quasirandom_implies_algebraic_check,
    quasiregular_implies_quasirandom_check,
    quasiregular_implies_uncaptureable_check,
    restrict_disagree_preserves,
)
from permjunta.regularity import decompose, verify_decomposition
from permjunta.rep_theory import (
    character_inner_product,
    conjugacy_classes,
    count_standard_tableaux,
    derangement_count,
    derangement_eigenvalue,
    dimension_hook,
    eigenvalue_bound_check,
    irreducible_character,
    kostka,
    partitions_of,
    permutation_character,
    signed_derangement_sum,
)
from permjunta.spectral import (
    FunctionOnSn,
    apply_derangement_operator,
    bilinear_profile,
    cross_disagreement_pairing,
    verify_spectral_gap_argument,
)
from permjunta.surgery import fixing_fibers, quotient_fraction, run_surgery


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        cap = f" (limit {self.limit:.0f} s)" if self.limit else ""
        return f"[{status}] {self.number:2d}. {self.name}: {self.detail} [{self.seconds:.1f} s{cap}]"


def _random_function(n: int, rng: random.Random, density: float = 0.2) -> FunctionOnSn:
    vals = {}
    for p in all_permutations(n):
        if rng.random() < density:
            vals[p] = Fraction(rng.randint(1, 8), 8)
    if not vals:
        vals[all_permutations(n)[0]] = Fraction(1)
    return FunctionOnSn(n, vals)


def _random_bijection(n: int, size: int, rng: random.Random) -> PartialBijection:
    xs = rng.sample(range(n), size)
    ys = rng.sample(range(n), size)
    return PartialBijection(tuple(zip(xs, ys)))


# ---------------------------------------------------------------------------


def criterion_rep_theory() -> tuple[bool, str]:
    bad = []
    for n in range(1, 9):
        for lam in partitions_of(n):
            if dimension_hook(lam) != count_standard_tableaux(lam):
                bad.append(f"hook {lam}")
    for n in range(1, 13):
        if sum(dimension_hook(lam) ** 2 for lam in partitions_of(n)) != math.factorial(n):
            bad.append(f"sum of squares n={n}")
    pairs = 0
    for n in range(1, 7):
        chars = {lam: irreducible_character(lam) for lam in partitions_of(n)}
        for a, b in itertools.product(chars, repeat=2):
            pairs += 1
            if character_inner_product(chars[a], chars[b]) != (1 if a == b else 0):
                bad.append(f"orthonormality {a},{b}")
    young = 0
    for n in range(1, 6):
        chars = {lam: irreducible_character(lam) for lam in partitions_of(n)}
        for beta in partitions_of(n):
            for c in conjugacy_classes(n):
                young += 1
                rhs = sum(kostka(lam, beta) * chars[lam](c) for lam in chars)
                if permutation_character(beta, c) != rhs:
                    bad.append(f"Young {beta} at {c}")
    detail = f"{pairs} character pairs, {young} Young identities"
    return not bad, detail + (f"; failures {bad[:3]}" if bad else "")


def criterion_spectra() -> tuple[bool, str]:
    bad = []
    dev = 0.0
    for n in (4, 5):
        g = build_agreement_graph(n, 0)
        dev = max(dev, float(np.abs(diagonalized_spectrum(g) - predicted_spectrum(g)).max()))
    if dev > 1e-9:
        bad.append(f"diagonalization deviates by {dev:.2e}")
    for n in range(2, 9):
        rep = eigenvalue_bound_check(n, 1)
        if rep.violations:
            bad.append(f"eigenvalue bound n={n}: {rep.violations}")
        trace = sum(dimension_hook(a) ** 2 * derangement_eigenvalue(a) for a in partitions_of(n))
        if trace != 0:
            bad.append(f"trace n={n} is {trace}")
    return not bad, f"max deviation {dev:.1e}; bound and trace exact for n <= 8" + (f"; {bad}" if bad else "")


def criterion_derangements() -> tuple[bool, str]:
    bad = []
    for n in range(1, 9):
        if derangement_count(n) != len(derangements(n)):
            bad.append(f"d_{n}")
    for m in range(1, 9):
        enum = sum(sign(p) for p in derangements(m))
        if enum != (-1) ** (m - 1) * (m - 1) or signed_derangement_sum(m) != enum:
            bad.append(f"signed sum m={m}")
    return not bad, "d_n and signed sums match enumeration for n <= 8" + (f"; {bad}" if bad else "")


def criterion_parseval(count: int = 200, seed: int = 4) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad = 0
    for k in range(count):
        n = 4 if k % 2 == 0 else 5
        f, g = _random_function(n, rng), _random_function(n, rng)
        norms = bilinear_profile(f, f)
        if sum(norms.values(), Fraction(0)) != f.norm_sq():
            bad += 1
            continue
        inner = bilinear_profile(f, g)
        spectral_side = sum((derangement_eigenvalue(a) * v for a, v in inner.items()), Fraction(0))
        direct = f.inner(apply_derangement_operator(g))
        if not spectral_side == direct == cross_disagreement_pairing(f, g):
            bad += 1
    return bad == 0, f"{count} random sparse functions on S_4/S_5, {bad} failures"


def criterion_regularity(random_count: int = 50, seed: int = 5) -> tuple[bool, str]:
    rng = random.Random(seed)
    families = [(f"random {k}", random_family(6, rng.choice([0.01, 0.05, 0.2, 0.5, 0.9]), rng)) for k in range(random_count)]
    families += structured_families(6)
    runs = failures = 0
    worst = Fraction(0)
    for name, F in families:
        for r, s in itertools.product((1, 2), (2, 3)):
            d = decompose(F, r, s)
            rep = verify_decomposition(d)
            runs += 1
            worst = max(worst, Fraction(rep.complexity, s**r))
            if not rep.ok or not rep.complexity_ok or not rep.remainder_ok:
                failures += 1
    return failures == 0, f"{runs} decompositions on S_6, {failures} failures, max C/s^r = {worst}"


def _implication_corpus(rng: random.Random) -> list[PermFamily]:
    out = []
    for n in (4, 5, 6):
        for _ in range(6):
            out.append(random_family(n, rng.choice([0.85, 0.9, 0.95]), rng))
        amb = RestrictionClass(n, (PartialBijection(((0, 0),)),))
        for _ in range(3):
            out.append(random_family(n, rng.choice([0.85, 0.95]), rng, amb))
    return out


def criterion_implications(seed: int = 6) -> tuple[bool, str]:
    rng = random.Random(seed)
    corpus = _implication_corpus(rng)
    counts = {"regular->random": [0, 0], "regular->uncaptureable": [0, 0], "single-point restriction": [0, 0], "small-error restriction": [0, 0], "random->algebraic": [0, 0]}

    def tally(key: str, run: Callable[[], object]) -> None:
        try:
            ok = bool(run())
        except ContractError:
            return
        counts[key][0] += 1
        counts[key][1] += 0 if ok else 1

    for F in corpus:
        n = F.n
        f = FunctionOnSn.indicator(F)
        ratio1 = check_quasiregular(F, 1, 2).attained
        for s in (1, 2):
            attained = check_quasiregular(F, s, 2).attained
            if attained - 1 < 1:
                tally("regular->random", lambda: quasiregular_implies_quasirandom_check(F, s, max(attained - 1, Fraction(0))))
        beta = max(ratio1, Fraction(101, 100))
        for N in (1, 2):
            tally("regular->uncaptureable", lambda: quasiregular_implies_uncaptureable_check(F, beta, F.measure() / 2, N))
        alpha = max(ratio1, Fraction(1))
        for x, y in itertools.product(range(1, n), repeat=2):
            pi = PartialBijection(((x, y),))
            tally("single-point restriction", lambda: restrict_disagree_preserves(F, pi, alpha, "single-point"))
        for size, s in ((1, 1), (2, 1), (1, 2)):
            pi = _random_bijection(n, size, rng)
            amb_free = [(x, y) for x, y in pi if x != 0 and y != 0]
            pi = PartialBijection(tuple(amb_free))
            attained = check_quasiregular(F, s, 2).attained
            tally("small-error restriction", lambda: restrict_disagree_preserves(F, pi, max(attained, Fraction(1)), "small-error", s=s))
        if n <= 5 and F.ambient.is_trivial():
            for r in (1, 2):
                tally("random->algebraic", lambda: quasirandom_implies_algebraic_check(f, r))
    for _ in range(10):
        n = rng.choice([4, 5])
        g = _random_function(n, rng, 0.4)
        for r in (1, 2):
            tally("random->algebraic", lambda: quasirandom_implies_algebraic_check(g, r))
    ok = all(c[0] > 0 and c[1] == 0 for c in counts.values())
    detail = ", ".join(f"{k}: {c[0]} instances/{c[1]} counterexamples" for k, c in counts.items())
    return ok, detail


def _intersecting_pairs(rng: random.Random) -> list[tuple[FunctionOnSn, FunctionOnSn]]:
    pairs = []
    for n in (3, 4, 5):
        perms = all_permutations(n)
        for _ in range(8):
            A = [p for p in perms if rng.random() < 0.15] or [perms[0]]
            meets = [q for q in perms if all(any(a == b for a, b in zip(p, q)) for p in A)]
            B = [q for q in meets if rng.random() < 0.6] or meets[:1]
            pairs.append((FunctionOnSn.indicator(PermFamily.of(n, A)), FunctionOnSn.indicator(PermFamily.of(n, B))))
        x, y = rng.randrange(n), rng.randrange(n)
        S = star(n, [(x + 1, y + 1)])
        sub = PermFamily.of(n, [p for p in S.members if rng.random() < 0.5] or list(S.members)[:1])
        pairs.append((FunctionOnSn.indicator(S), FunctionOnSn.indicator(sub)))
    return pairs


def criterion_spectral_balance(seed: int = 7) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad = 0
    pairs = _intersecting_pairs(rng)
    for f1, f2 in pairs:
        if cross_disagreement_pairing(f1, f2) != 0:
            bad += 1
            continue
        if not verify_spectral_gap_argument(f1, f2, 1).balanced:
            bad += 1
    f = FunctionOnSn.indicator(star(4, [(1, 1)]))
    rep = verify_spectral_gap_argument(f, f, 1)
    closed = (
        rep.mean_product == Fraction(1, 16)
        and rep.terms[(3, 1)] == Fraction(-1, 3) * Fraction(3, 16)
        and all(v == 0 for a, v in rep.terms.items() if a not in ((4,), (3, 1)))
        and rep.balanced
    )
    return bad == 0 and closed, f"{len(pairs)} pairs balanced exactly, {bad} failures; 1-star on S_4 closed form {closed}"


def _fixing_configs(n: int, rng: random.Random, count: int) -> list[tuple[PartialBijection, PartialBijection]]:
    out = []
    for _ in range(count):
        k1 = rng.randint(0, max(0, n - 2))
        k2 = rng.randint(1, max(1, (n - k1) // 2))
        xs = rng.sample(range(n), k1 + k2)
        ys = rng.sample(range(n), k1 + k2)
        out.append((PartialBijection(tuple(zip(xs[:k1], ys[:k1]))), PartialBijection(tuple(zip(xs[k1:], ys[k1:])))))
    return out


def criterion_surgery(seed: int = 8) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad = []
    covered: set[str] = set()
    bullets = planted = 0
    for inst in SURGERY_CORPUS:
        F1, F2 = inst.families()
        run = run_surgery(F1, F2, s=1, t=inst.t, enforce=False)
        for st in run.steps:
            bullets += len(st.checks)
            planted += st.planted_pairs
            if not st.checks.get("lifting") or st.planted_pairs == 0:
                bad.append(f"{inst.name}: lifting not verified")
        if not run.ok:
            bad.append(f"{inst.name}: {[k for st in run.steps for k, v in st.checks.items() if not v]}")
        covered.update(inst.covers)
    needed = {"cycle", "even-x", "even-y", "odd"}
    if not needed <= covered or len(SURGERY_CORPUS) < 10:
        bad.append("corpus coverage")
    fibers = 0
    for n in range(2, 7):
        for pi1, pi2 in _fixing_configs(n, rng, 4):
            try:
                fixing_fibers(n, pi1, pi2)
            except ContractError:
                continue
            amb = RestrictionClass(n, (pi1,) if pi1 else (), (pi2,) if pi2 else ())
            if amb.size() == 0:
                continue
            F = random_family(n, 0.5, rng, amb)
            try:
                quotient_fraction(F, pi1, pi2)
            except Exception as exc:  # any failure here is a criterion failure
                bad.append(f"quotient n={n}: {exc}")
            fibers += 1
    detail = (
        f"{len(SURGERY_CORPUS)} instances, {bullets} machine-checked bullets, {planted} planted pairs; "
        f"{fibers} fixing-operator configurations"
    )
    return not bad and fibers > 0, detail + (f"; {bad[:3]}" if bad else "")


def criterion_extremal(seed: int = 9) -> tuple[bool, str]:
    bad = []
    found = {}
    for n, want in ((4, 6), (5, 24)):
        res = search_extremal(n, 0)
        found[n] = res.size
        if res.size != want or not res.tight:
            bad.append(f"n={n}: size {res.size}, Hoffman {res.hoffman}")
    rng = random.Random(seed)
    seen = {True: 0, False: 0}
    for _ in range(150):
        n = rng.choice([3, 4, 5])
        a = rng.randrange(0, n)
        g = build_agreement_graph(n, a)
        perms = all_permutations(n)
        F = PermFamily.of(n, rng.sample(perms, rng.randint(1, min(6, len(perms)))))
        left, right = is_intersection_free(F, a), g.is_independent(F)
        seen[left] += 1
        if left != right:
            bad.append(f"equivalence fails on n={n}, a={a}")
    if not all(seen.values()):
        bad.append("equivalence corpus misses a direction")
    detail = f"alpha(n=4) = {found.get(4)}, alpha(n=5) = {found.get(5)}, Hoffman tight; equivalence on {sum(seen.values())} families ({seen[True]} free, {seen[False]} not)"
    return not bad, detail + (f"; {bad[:3]}" if bad else "")


def criterion_star_count(count: int = 100, seed: int = 10) -> tuple[bool, str]:
    rng = random.Random(seed)
    done = equal_class = 0
    bad = []
    while done < count:
        n = rng.randint(2, 7)
        t = rng.randint(1, n - 1)
        rho = list(range(n))
        rng.shuffle(rho)
        if all(rho[i] == i for i in range(t)):
            continue
        c = count_agreeing_in_star(rho, t, n)
        done += 1
        if c.brute_force < c.formula:
            bad.append(rho)
    # the class s = 0, v = 0: ρ permutes [t] without fixed points
    for n in range(4, 8):
        for t in range(2, n // 2 + 1):
            for head in itertools.permutations(range(t)):
                if any(head[i] == i for i in range(t)):
                    continue
                tail = list(range(t, n))
                rng.shuffle(tail)
                c = count_agreeing_in_star(list(head) + tail, t, n)
                equal_class += 1
                if c.brute_force != c.formula:
                    bad.append(("equality", n, t, head))
    ex = count_agreeing_in_star([1, 0, 2, 3, 4, 5], 2, 6)
    if (ex.formula, ex.brute_force) != (8, 8):
        bad.append("n=6 example")
    return not bad, f"{done} random instances, {equal_class} equality instances, n=6 example {ex.formula}/{ex.brute_force}" + (
        f"; {bad[:3]}" if bad else ""
    )


CRITERIA: tuple[tuple[int, str, Callable[[], tuple[bool, str]], float | None], ...] = (
    (1, "representation-theory core", criterion_rep_theory, 60),
    (2, "spectra", criterion_spectra, 300),
    (3, "derangement facts", criterion_derangements, None),
    (4, "Parseval and operator identities", criterion_parseval, 120),
    (5, "junta decomposition", criterion_regularity, 600),
    (6, "implication suite", criterion_implications, None),
    (7, "spectral-argument identity", criterion_spectral_balance, None),
    (8, "surgery", criterion_surgery, None),
    (9, "extremal numbers", criterion_extremal, 600),
    (10, "counting inside a star", criterion_star_count, None),
)


def run_criterion(number: int) -> Criterion:
    for num, name, fn, limit in CRITERIA:
        if num == number:
            start = time.perf_counter()
            passed, detail = fn()
            elapsed = time.perf_counter() - start
            if limit is not None and elapsed > limit:
                passed = False
                detail += f"; exceeded the {limit:.0f} s limit"
            return Criterion(num, name, passed, detail, elapsed, limit)
    raise ContractError(f"no acceptance criterion {number}")


def run_all(only: list[int] | None = None) -> list[Criterion]:
    return [run_criterion(num) for num, *_ in CRITERIA if only is None or num in only]


__all__ = ["CRITERIA", "Criterion", "run_all", "run_criterion"]

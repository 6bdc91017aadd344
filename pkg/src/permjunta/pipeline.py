"""End-to-end orchestration: from a family to a t-intersecting junta or a forbidden pair.

Given F ⊆ S_n, decompose it; if the junta is t-intersecting we are done.
Otherwise two generators π1, π2 agreeing on u < t points are driven through
the pseudorandomness bootstraps, matching surgery and fractional quotients
until either a pair of members of F agreeing in exactly t − 1 places is
pulled back, or the quotient pair carries no disagreeing mass and the
spectral balance is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from permjunta.errors import ContractError, InvariantViolation
from permjunta.exact import Surd, format_fraction
from permjunta.gates import GateLog
from permjunta.perm import (
    EMPTY,
    PartialBijection,
    PermFamily,
    Permutation,
    RestrictionClass,
    agreements,
    identity,
    to_one_based,
)
from permjunta.pseudorandom import (
    bootstrap_uncap_to_quasiregular,
    bootstrap_uncap_to_s_quasiregular,
    find_extra_agreements,
    quasiregular_implies_uncaptureable_check,
)
from permjunta.regularity import decompose, t_intersecting_junta_check, verify_decomposition
from permjunta.spectral import FunctionOnSn, cross_disagreement_pairing, verify_spectral_gap_argument
from permjunta.surgery import (
    MatchingQuadruple,
    Move,
    Relabelling,
    apply_move,
    fiber_pair,
    lift_permutation,
    preprocess_unique_pairs,
    quotient_fraction,
    relabel_function,
    run_surgery,
    unrelabel,
    validate_good_properties,
)

OUTCOME_JUNTA = "junta is t-intersecting"
OUTCOME_WITNESS = "pair agreeing in exactly t-1 places"
OUTCOME_BALANCED = "no disagreeing mass; spectral balance reported"


@dataclass
class Stage:
    name: str
    lines: list[str] = field(default_factory=list)
    ok: bool = True


@dataclass
class PipelineResult:
    n: int
    t: int
    r: int
    epsilon: Fraction
    outcome: str = ""
    stages: list[Stage] = field(default_factory=list)
    gates: GateLog = field(default_factory=GateLog)
    generators: tuple[PartialBijection, PartialBijection] | None = None
    witness: tuple[Permutation, Permutation] | None = None

    @property
    def ok(self) -> bool:
        return all(st.ok for st in self.stages)

    def stage(self, name: str) -> Stage:
        st = Stage(name)
        self.stages.append(st)
        return st

    def lines(self) -> list[str]:
        out = [f"pipeline n={self.n} t={self.t} r={self.r} epsilon={format_fraction(self.epsilon)}"]
        for st in self.stages:
            out.append(f"[{st.name}] {'ok' if st.ok else 'FAIL'}")
            out += ["  " + line for line in st.lines]
        out.append(f"outcome: {self.outcome}")
        if self.witness is not None:
            a, b = self.witness
            out.append(f"witness: {to_one_based(a)} and {to_one_based(b)}")
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "r": self.r,
            "epsilon": format_fraction(self.epsilon),
            "outcome": self.outcome,
            "ok": self.ok,
            "generators": None if self.generators is None else [g.to_json() for g in self.generators],
            "witness": None if self.witness is None else [to_one_based(p) for p in self.witness],
            "gates": [g.to_json() for g in self.gates.gates],
            "stages": [{"name": st.name, "ok": st.ok, "lines": st.lines} for st in self.stages],
        }


def _checks(stage: Stage, checks: dict[str, bool]) -> None:
    for name, ok in checks.items():
        stage.lines.append(f"check {name}: {'pass' if ok else 'FAIL'}")
        stage.ok &= bool(ok)


def _gates(stage: Stage, result: PipelineResult, log: GateLog) -> None:
    stage.lines += log.lines()
    result.gates.extend(log)


def pick_generators(gens: tuple[PartialBijection, ...], t: int) -> tuple[PartialBijection, PartialBijection]:
    """Lex-first pair (allowing a generator with itself) agreeing on fewer than t points."""
    for i, a in enumerate(gens):
        for b in gens[i:]:
            if len(a.intersection(b)) < t:
                return a, b
    raise ContractError("every pair of generators agrees on at least t points")


def _reassemble(H: PermFamily, rho: PartialBijection, tau: PartialBijection) -> PermFamily:
    """Same members, ambient rewritten as S_n(ρ, τ̄) with τ pairs touching ρ dropped (they are implied)."""
    tau = PartialBijection(tuple((x, y) for x, y in tau if x not in rho.mapping and y not in rho.range))
    amb = RestrictionClass(H.n, (rho,) if rho else (), (tau,) if tau else ())
    if amb.size() != H.ambient.size():
        raise InvariantViolation("reassembled ambient differs in size")
    return PermFamily(amb, H.members)


def _union(*parts: PartialBijection) -> PartialBijection:
    out = EMPTY
    for p in parts:
        out = out.union(p)
    return out


def run_pipeline(
    F: PermFamily,
    t: int,
    r: int,
    epsilon: Fraction | int | str,
    enforce: bool = True,
    N: int | None = None,
    threads: int = 1,
) -> PipelineResult:
    n = F.n
    eps = Fraction(epsilon)
    res = PipelineResult(n, t, r, eps, gates=GateLog(enforce))
    if not F.ambient.is_trivial():
        raise ContractError("the pipeline expects a family in all of S_n")

    st = res.stage("decompose")
    s_reg = 2 * r - 1
    d = decompose(F, r, s_reg, threads)
    rep = verify_decomposition(d)
    st.lines += rep.lines()
    st.lines.append("generators: " + ", ".join(str(g) for g in d.junta.generators))
    st.ok = rep.ok
    if t_intersecting_junta_check(d.junta, t):
        st.lines.append("junta is t-intersecting")
        res.outcome = OUTCOME_JUNTA
        return res

    st = res.stage("preprocess")
    pi1, pi2 = pick_generators(d.junta.generators, t)
    res.generators = (pi1, pi2)
    u = len(pi1.intersection(pi2))
    sig1, sig2 = preprocess_unique_pairs(pi1, pi2)
    F1 = F.restrict(agree=[pi1], disagree=[sig1] if sig1 else [])
    F2 = F.restrict(agree=[pi2], disagree=[sig2] if sig2 else [])
    st.lines += [
        f"pi1 = {pi1}, pi2 = {pi2}, agreeing on u = {u} points",
        f"sigma1 = {sig1}, sigma2 = {sig2}",
        f"measures {format_fraction(F1.measure())}, {format_fraction(F2.measure())}",
    ]

    st = res.stage("bootstrap to (1, 2sqrt(n))-quasiregular")
    b1 = bootstrap_uncap_to_quasiregular(F1, F2, r, s_reg, enforce)
    _gates(st, res, b1.gates)
    st.lines.append(f"pi3 = {b1.pi3}, pi4 = {b1.pi4}")
    _checks(st, b1.postconditions)

    st = res.stage("uncaptureability transfer")
    big_n = math.isqrt(n) // 8 if N is None else N
    beta = Surd.sqrt(n, 2)
    delta = Fraction(1, 2 * n**r)
    for label, H in (("first", b1.F1), ("second", b1.F2)):
        try:
            imp = quasiregular_implies_uncaptureable_check(H, beta, delta, big_n)
            _checks(st, {f"{label} ({big_n}, n^-r/4)-uncaptureable": imp.passed})
        except ContractError as exc:
            log = GateLog(enforce)
            try:
                log.require(f"{label} transfer hypotheses", False, str(exc))
            finally:
                _gates(st, res, log)

    st = res.stage("bootstrap to (r+t, 1+2eps)-quasiregular")
    b2 = bootstrap_uncap_to_s_quasiregular(b1.F1, b1.F2, r, r + t, eps, big_n, Fraction(1, 4), enforce)
    _gates(st, res, b2.gates)
    st.lines.append(f"pi5 = {b2.pi3}, pi6 = {b2.pi4}")
    _checks(st, b2.postconditions)

    st = res.stage("extra agreements")
    extra = t - 1 - u
    pi7 = EMPTY
    H1, H2 = b2.F1, b2.F2
    if extra > 0:
        ea = find_extra_agreements(H1, H2, extra, r + t, 2 * eps, enforce=enforce)
        _gates(st, res, ea.gates)
        pi7 = ea.pi
        H1, H2 = H1.restrict(agree=[pi7]), H2.restrict(agree=[pi7])
        retained = 1 - 8 * eps
        _checks(st, {"retention >= 1-8eps": all(x >= retained for x in ea.retention)})
    st.lines.append(f"pi7 = {pi7} (t - 1 - u = {extra})")

    st = res.stage("assemble")
    rho1 = _union(pi1, b1.pi3, b2.pi3, pi7)
    rho2 = _union(pi2, b1.pi4, b2.pi4, pi7)
    tau1 = _union(sig1, b1.pi4, b2.pi4)
    tau2 = _union(sig2, b1.pi3, b2.pi3)
    G1, G2 = _reassemble(H1, rho1, tau1), _reassemble(H2, rho2, tau2)
    q = MatchingQuadruple.from_families(G1, G2)
    good = validate_good_properties(q)
    st.lines += [f"rho1 = {q.M1}, tau1 = {q.N1}", f"rho2 = {q.M2}, tau2 = {q.N2}"]
    st.lines += [f"failure: {f}" for f in good.failures]
    _checks(st, {"good properties": good.ok, "rho1, rho2 agree in t-1 places": len(q.agreement()) == t - 1})
    if not good.ok or len(q.agreement()) != t - 1:
        raise InvariantViolation("assembled quadruple is not a valid surgery input")

    st = res.stage("surgery")
    premise = res.gates.all_satisfied
    run = run_surgery(G1, G2, r + u + 1, min(16 * eps, Fraction(1)), t, enforce, premise)
    st.lines += run.lines() or ["no type-2 edges"]
    for step in run.steps:
        res.gates.extend(step.gates)
        st.ok &= step.ok
    K1, K2, qf = run.F1, run.F2, run.q

    st = res.stage("quotient")
    psi = qf.agreement()
    phi1, phi2 = qf.M1.without(psi), qf.M2.without(psi)
    rel = Relabelling(qf.n, psi.domain, tuple(sorted(psi.range)))
    still = Move(identity(qf.n), identity(qf.n))
    L1, a1, c1, forced1 = apply_move(K1, still, rel)
    L2, a2, c2, forced2 = apply_move(K2, still, rel)
    _checks(st, {"tau1 = phi2 and tau2 = phi1": c1 == a2 and c2 == a1})
    if c1 != a2 or c2 != a1:
        raise InvariantViolation("after surgery the constraints are not of the form (phi1, not phi2)")
    f = quotient_fraction(L1, a1, a2)
    g = quotient_fraction(L2, a2, a1)
    both = a1.union(a2)
    f = FunctionOnSn(f.n, f.values, RestrictionClass(f.n, (both,) if both else ()))
    g = FunctionOnSn(g.n, g.values, RestrictionClass(g.n, (both,) if both else ()))
    fh, frel = relabel_function(f, both)
    gh, _ = relabel_function(g, both)
    st.lines += [
        f"psi = {psi}, phi1 = {a1}, phi2 = {a2} (after deleting psi)",
        f"quotients live on S_{fh.n}; E f = {format_fraction(fh.mean())}, E g = {format_fraction(gh.mean())}",
    ]
    _checks(st, {"E f = mu": fh.mean() == L1.measure(), "E g = mu": gh.mean() == L2.measure()})

    st = res.stage("spectral test")
    pairing = cross_disagreement_pairing(fh, gh)
    st.lines.append(f"<f, A g> = {format_fraction(pairing)}")
    if pairing == 0:
        bal = verify_spectral_gap_argument(fh, gh, r)
        _checks(st, {"balance": bal.balanced, "Cauchy-Schwarz": bal.cauchy_schwarz_ok})
        st.lines.append(
            f"E f E g = {format_fraction(bal.mean_product)}, high block {format_fraction(bal.high_block)}, "
            f"low block {format_fraction(bal.low_block)}"
        )
        res.outcome = OUTCOME_BALANCED
        return res
    sigma1, sigma2 = _disagreeing_support_pair(fh, gh)
    up1, up2 = unrelabel(sigma1, both, frel), unrelabel(sigma2, both, frel)
    w1, w2 = fiber_pair(L1, L2, up1, up2)
    v1 = lift_permutation(w1, still, rel, forced1)
    v2 = lift_permutation(w2, still, rel, forced2)
    x1, x2 = run.lift(v1, v2)
    count = agreements(x1, x2)
    _checks(
        st,
        {
            "fiber pair disagrees everywhere": agreements(w1, w2) == 0,
            "lifted pair in F": x1 in F.members and x2 in F.members,
            "lifted pair agrees in exactly t-1 places": count == t - 1,
        },
    )
    res.witness = (x1, x2)
    res.outcome = OUTCOME_WITNESS
    return res


def _disagreeing_support_pair(f, g) -> tuple[Permutation, Permutation]:
    for a in f.support:
        for b in g.support:
            if all(x != y for x, y in zip(a, b)):
                return a, b
    raise InvariantViolation("positive pairing but no disagreeing support pair")


def demo_family() -> PermFamily:
    """The bundled S_7 instance: permutations fixing 1 or fixing 2."""
    n = 7
    members = [p for p in RestrictionClass(n).members() if p[0] == 0 or p[1] == 1]
    return PermFamily.of(n, members)


DEMO = {"t": 1, "r": 2}

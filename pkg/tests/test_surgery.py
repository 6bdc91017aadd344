import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permjunta.corpus import SURGERY_CORPUS, surgery_instance
from permjunta.errors import ContractError
from permjunta.perm import (
    EMPTY,
    PartialBijection,
    PermFamily,
    RestrictionClass,
    agreements,
    identity,
    permutation,
)
from permjunta.surgery import (
    MatchingQuadruple,
    classify_edges,
    cross_intersection_transfer_check,
    eliminate_cycle,
    eliminate_even_path,
    eliminate_odd_paths,
    fiber_pair,
    fixing_fibers,
    fixing_operator,
    preprocess_unique_pairs,
    quotient_fraction,
    replay_step,
    run_surgery,
    validate_good_properties,
)

from conftest import partial_bijections, permutations_of

P = PartialBijection.from_one_based


def quad(n, M1, M2, N1=(), N2=()):
    return MatchingQuadruple(n, P(M1), P(M2), P(N1), P(N2))


def test_identical_matchings_are_type_one():
    q = quad(5, [(1, 1), (2, 2)], [(1, 1), (2, 2)])
    cls = classify_edges(q)
    assert cls.type1 == {(0, 0), (1, 1)} and not cls.cycles and not cls.paths
    assert validate_good_properties(q).ok


def test_four_cycle_classification():
    q = quad(6, [(1, 1), (2, 2)], [(2, 1), (1, 2)])
    cls = classify_edges(q)
    assert not cls.type1 and not cls.paths
    assert [c.signature() for c in cls.cycles] == [("cycle", 4)]


def test_good_property_failure_names_vertex():
    q = quad(6, [(1, 1), (2, 2)], [(1, 1), (2, 2)], N1=[(1, 3)])
    rep = validate_good_properties(q)
    assert not rep.ok and rep.witness == "x1"
    assert any("share vertex x1" in f for f in rep.failures)


def test_untyped_edge_is_a_violation():
    rep = validate_good_properties(quad(5, [(1, 1)], [(2, 2)]))
    assert not rep.ok and "neither type 1 nor type 2" in rep.failures[0]


def test_cycle_elimination_preserves_measures():
    F1, F2 = surgery_instance("cycle4-n6").families()
    q = MatchingQuadruple.from_families(F1, F2)
    G1, G2, q2, step = eliminate_cycle(F1, F2, q, classify_edges(q).cycles[0])
    assert G1.n == G2.n == 4
    assert (G1.measure(), G2.measure()) == (F1.measure(), F2.measure())
    assert step.ok and step.planted_pairs > 0
    assert validate_good_properties(q2).ok


def test_cycle_elimination_without_cycle_fails():
    F1, F2 = surgery_instance("xpath2-n7").families()
    q = MatchingQuadruple.from_families(F1, F2)
    with pytest.raises(ContractError, match="classify_edges"):
        eliminate_cycle(F1, F2, q, None)


def test_even_path_elimination_both_sides():
    for name in ("xpath2-n6", "ypath2-n6"):
        F1, F2 = surgery_instance(name).families()
        q = MatchingQuadruple.from_families(F1, F2)
        path = classify_edges(q).even_paths()[0]
        G1, G2, q2, step = eliminate_even_path(F1, F2, q, path)
        assert step.ok and (G1.measure(), G2.measure()) == (F1.measure(), F2.measure())
        assert not classify_edges(q2).paths


def test_odd_path_passed_as_even_fails():
    F1, F2 = surgery_instance("odd3-n6").families()
    q = MatchingQuadruple.from_families(F1, F2)
    with pytest.raises(ContractError, match="odd-length"):
        eliminate_even_path(F1, F2, q, classify_edges(q).odd_paths()[0])


def test_odd_path_elimination():
    F1, F2 = surgery_instance("odd3-n6").families()
    q = MatchingQuadruple.from_families(F1, F2)
    ntype1 = len(classify_edges(q).type1)
    G1, G2, q2, step = eliminate_odd_paths(F1, F2, q, enforce=False, premise=False)
    assert step.ok
    cls = classify_edges(q2)
    assert not cls.paths and len(cls.type1) == ntype1 + 1
    assert all(a >= b / 2 for a, b in zip(step.measures_after, step.measures_before))
    with pytest.raises(ContractError, match="gate 'odd-path size'"):
        eliminate_odd_paths(F1, F2, q, premise=False)


def test_odd_step_without_odd_paths_is_identity():
    q = MatchingQuadruple(6, P([(1, 1)]), P([(1, 1)]))
    amb = q.ambient(1)
    H = PermFamily.full(amb)
    G1, G2, q2, step = eliminate_odd_paths(H, H, q, enforce=False, premise=False)
    assert q2 == q and G1.members == H.members and step.ok


def test_corpus_runs_green():
    assert len(SURGERY_CORPUS) >= 10
    covered = set()
    for inst in SURGERY_CORPUS:
        F1, F2 = inst.families()
        run = run_surgery(F1, F2, t=inst.t, enforce=False)
        assert run.ok, (inst.name, run.lines())
        assert not classify_edges(run.q).cycles and not classify_edges(run.q).paths
        covered.update(st.kind for st in run.steps)
        covered.update(inst.covers)
    assert {"cycle", "even-path", "odd-paths-batch"} <= covered
    assert {"cycle", "even-x", "even-y", "odd"} <= covered


def test_run_lifts_planted_pairs():
    F1, F2 = surgery_instance("cycle-then-xpath-n7").families()
    run = run_surgery(F1, F2, enforce=False)
    c = len(run.q.agreement())
    A1 = list(run.q.ambient(1).members())
    A2 = list(run.q.ambient(2).members())
    rng = random.Random(0)
    checked = 0
    for _ in range(200):
        a, b = rng.choice(A1), rng.choice(A2)
        if agreements(a, b) != c:
            continue
        up1, up2 = run.lift(a, b)
        assert agreements(up1, up2) == len(MatchingQuadruple.from_families(F1, F2).agreement())
        checked += 1
    assert checked


def test_step_json_replays():
    F1, F2 = surgery_instance("cycle4-n6").families()
    q = MatchingQuadruple.from_families(F1, F2)
    G1, G2, _, step = eliminate_cycle(F1, F2, q, classify_edges(q).cycles[0])
    data = json.loads(json.dumps(step.to_json()))
    H1, H2 = replay_step(data, F1, F2)
    assert H1.members == G1.members and H2.members == G2.members


def test_preprocessing_unique_pairs():
    pi1 = P([(1, 1), (2, 2), (3, 4)])
    pi2 = P([(1, 1), (4, 3), (5, 2)])
    s1, s2 = preprocess_unique_pairs(pi1, pi2)
    assert s1 == P([(4, 3)])
    assert s2 == P([(3, 4)])


def test_fixing_operator_examples():
    sigma = permutation([2, 1, 3])
    assert fixing_operator(EMPTY, P([(1, 1)]), sigma) == identity(3)
    assert fixing_operator(EMPTY, EMPTY, sigma) == sigma
    with pytest.raises(ContractError):
        fixing_operator(EMPTY, P([(1, 1)]), identity(3))


def test_quotient_examples():
    amb = RestrictionClass(3, (), (P([(1, 1)]),))
    F = PermFamily(amb, frozenset([permutation([2, 1, 3])]))
    f = quotient_fraction(F)
    assert f(identity(3)) == Fraction(1, 2)
    assert f.mean() == F.measure()
    full = quotient_fraction(PermFamily.full(amb))
    assert all(full(t) == 1 for t in full.ambient.members())
    assert not quotient_fraction(PermFamily(amb)).values


@given(st.data())
def test_fixing_fibers_are_constant(data):
    n = data.draw(st.integers(2, 6))
    pair = data.draw(partial_bijections(n, max_size=min(3, n // 2)))
    k = data.draw(st.integers(0, len(pair)))
    pi1, pi2 = PartialBijection(pair.pairs[:k]), PartialBijection(pair.pairs[k:])
    fibers = fixing_fibers(n, pi1, pi2)
    assert len({len(v) for v in fibers.values()}) == 1
    target = RestrictionClass(n, (pair,) if pair else ())
    assert set(fibers) == set(target.members())


@given(st.data())
def test_fixing_swaps_commute(data):
    n = data.draw(st.integers(3, 7))
    pi2 = data.draw(partial_bijections(n, max_size=3))
    sigma = data.draw(permutations_of(n))
    if not pi2.disagrees_with(sigma):
        return
    # check=True asserts pairwise commutation internally
    out = fixing_operator(EMPTY, pi2, sigma)
    assert pi2.agrees_with(out)


def test_transfer_on_common_star():
    pi1, pi2 = P([(1, 1)]), P([(2, 2)])
    A = RestrictionClass(5, (pi1,), (pi2,))
    B = RestrictionClass(5, (pi2,), (pi1,))
    F = PermFamily(A, frozenset(p for p in A.members() if p[2] == 2))
    G = PermFamily(B, frozenset(p for p in B.members() if p[2] == 2))
    rep = cross_intersection_transfer_check(F, G)
    assert rep and rep.vanishing and rep.quasiregular and rep.checked_pairs > 0


def test_transfer_hypothesis_gate():
    pi1, pi2 = P([(1, 1)]), P([(2, 2)])
    F = PermFamily.full(RestrictionClass(5, (pi1,), (pi2,)))
    G = PermFamily.full(RestrictionClass(5, (pi2,), (pi1,)))
    with pytest.raises(ContractError, match="hypothesis fails"):
        cross_intersection_transfer_check(F, G)


def test_transfer_needs_double_order():
    pi = P([(3, 1)])
    A, B = RestrictionClass(5, (pi,)), RestrictionClass(5, (), (pi,))
    Am, Bm = list(A.members()), list(B.members())
    rng = random.Random(0)
    broke_same_order = False
    for _ in range(40):
        F = rng.sample(Am, rng.randint(1, 4))
        G = [q for q in Bm if all(agreements(p, q) > 0 for p in F) and rng.random() < 0.7]
        if not G:
            continue
        rep = cross_intersection_transfer_check(PermFamily(A, frozenset(F)), PermFamily(B, frozenset(G)))
        assert rep
        broke_same_order |= not rep.same_order
    assert broke_same_order


def test_fiber_pair_disagrees_everywhere():
    pi1, pi2 = P([(1, 1)]), P([(2, 2)])
    A = RestrictionClass(5, (pi1,), (pi2,))
    B = RestrictionClass(5, (pi2,), (pi1,))
    F, G = PermFamily.full(A), PermFamily.full(B)
    s1 = permutation([1, 2, 3, 4, 5])
    s2 = permutation([1, 2, 4, 5, 3])
    a, b = fiber_pair(F, G, s1, s2)
    assert agreements(a, b) == 0

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permjunta.errors import ContractError, DegenerateInputError
from permjunta.exact import Surd
from permjunta.perm import PartialBijection, PermFamily, RestrictionClass, all_permutations, sign
from permjunta.pseudorandom import (
    bootstrap_uncap_to_quasiregular,
    bootstrap_uncap_to_s_quasiregular,
    check_captureable,
    check_quasiregular,
    check_quasirandom,
    find_extra_agreements,
    measure_avoiding,
    measure_extending,
    quasiregular_implies_quasirandom_check,
    quasiregular_implies_uncaptureable_check,
    quasirandom_implies_algebraic_check,
    restrict_disagree_preserves,
    restricted_variance,
)
from permjunta.spectral import FunctionOnSn

from conftest import families, family_of

P = PartialBijection.from_one_based


def full(n, agree=(), disagree=()):
    return PermFamily.full(RestrictionClass(n, agree, disagree))


def spiked(n, seed=1, rest=0.25):
    """Everything through 2->2 plus a random quarter of the rest."""
    rng = random.Random(seed)
    return PermFamily.of(n, [p for p in all_permutations(n) if p[1] == 1 or rng.random() < rest])


def test_captureable_examples():
    rep = check_captureable(full(4), 2, Fraction(1, 3))
    assert not rep.verdict and rep.attained == 1
    star = family_of(4, lambda p: p[0] == 0)
    rep = check_captureable(star, 1, 0)
    assert rep.verdict and rep.witness == P([(1, 1)]) and rep.attained == 0
    F = family_of(5, lambda p: p[0] == 0 or p[1] == 1)
    rep = check_captureable(F, 2, 0)
    assert rep.verdict and rep.witness == P([(1, 1), (2, 2)])
    assert not check_captureable(F, 1, 0).verdict


def test_quasiregular_examples():
    rep = check_quasiregular(full(5), 2, Fraction(101, 100))
    assert rep.verdict and rep.attained == 1
    star = family_of(4, lambda p: p[0] == 0)
    rep = check_quasiregular(star, 1, 4)
    assert not rep.verdict and rep.attained == 4 and rep.witness == P([(1, 1)])
    assert check_quasiregular(star, 1, Fraction(401, 100)).verdict
    f = FunctionOnSn.constant(4, Fraction(1, 3))
    assert check_quasiregular(f, 2, Fraction(11, 10)).verdict
    with pytest.raises(DegenerateInputError):
        check_quasiregular(PermFamily(RestrictionClass(4)), 1, 2)


def test_quasiregular_with_irrational_threshold():
    star = family_of(4, lambda p: p[0] == 0)
    assert not check_quasiregular(star, 1, Surd.sqrt(16)).verdict
    assert check_quasiregular(star, 1, Surd.sqrt(17)).verdict


def test_quasirandom_examples():
    rep = check_quasirandom(FunctionOnSn.constant(5, Fraction(1, 2)), 2, 0)
    assert rep.verdict and rep.attained == 0
    star = family_of(4, lambda p: p[0] == 0)
    assert restricted_variance(star, 1) == Fraction(1, 16)
    rep = check_quasirandom(star, 1, 1)
    assert rep.verdict and rep.attained == 1
    assert not check_quasirandom(star, 1, Fraction(99, 100)).verdict


def test_quasiregular_to_quasirandom_examples():
    assert quasiregular_implies_quasirandom_check(FunctionOnSn.constant(4, 1), 2, 0).passed
    rng = random.Random(4)
    F = PermFamily.of(5, [p for p in all_permutations(5) if rng.random() < 0.7])
    eps = check_quasiregular(F, 1, 2).attained - 1
    assert 0 < eps < 1
    assert quasiregular_implies_quasirandom_check(F, 1, eps).passed
    with pytest.raises(ContractError):
        quasiregular_implies_quasirandom_check(family_of(4, lambda p: p[0] == 0), 1, Fraction(1, 2))


def test_quasiregular_to_uncaptureable_examples():
    assert quasiregular_implies_uncaptureable_check(full(6), 2, Fraction(1, 2), 1).passed
    rng = random.Random(6)
    H = PermFamily.of(5, [p for p in all_permutations(5) if rng.random() < 0.8])
    assert check_quasiregular(H, 1, 2).verdict
    assert quasiregular_implies_uncaptureable_check(H, 2, Fraction(1, 2), 1).passed
    with pytest.raises(ContractError):
        quasiregular_implies_uncaptureable_check(H, 2, Fraction(9, 10), 1)


def test_restrict_disagree_examples():
    H = full(6, (P([(1, 1)]),))
    rep = restrict_disagree_preserves(H, PartialBijection(()), 1)
    assert rep.passed and rep.details["retention"] == 1
    rep = restrict_disagree_preserves(H, P([(2, 3)]), 1)
    assert rep.passed and rep.details["retention"] >= Fraction(1, 2)
    # measures are relative to the shrunken ambient, so a full class keeps all of it
    assert rep.details["retention"] == 1
    with pytest.raises(ContractError):
        restrict_disagree_preserves(H, P([(2, 3)]), 5)
    rep = restrict_disagree_preserves(full(7), P([(2, 3)]), 1, mode="small-error", s=1)
    assert rep.passed
    with pytest.raises(ContractError):
        restrict_disagree_preserves(full(7), P([(2, 3)]), 3, mode="small-error")


def test_bootstrap_examples():
    res = bootstrap_uncap_to_quasiregular(full(6), full(6), 1, 1, enforce=False)
    assert res.pi3 == res.pi4 == PartialBijection(()) and res.ok
    assert any(line.startswith("gate size: waived") for line in res.lines())
    res = bootstrap_uncap_to_quasiregular(spiked(6), full(6), 1, 1, enforce=False)
    assert res.steps[0] == P([(2, 2)]) and res.ok
    assert check_quasiregular(res.F1, 1, Surd.sqrt(24)).verdict
    with pytest.raises(ContractError, match="gate 'size'"):
        bootstrap_uncap_to_quasiregular(full(6), full(6), 1, 1)


def test_s_bootstrap_examples():
    res = bootstrap_uncap_to_s_quasiregular(full(6), full(6), 1, 1, Fraction(1, 4), 1, 1, enforce=False)
    assert res.pi3 == res.pi4 == PartialBijection(()) and res.ok
    res = bootstrap_uncap_to_s_quasiregular(spiked(6), full(6), 1, 1, Fraction(1, 4), 1, 1, enforce=False)
    assert res.steps == (P([(2, 2)]),) and res.ok
    with pytest.raises(ContractError, match="gate 'budget'"):
        bootstrap_uncap_to_s_quasiregular(full(6), full(6), 1, 1, Fraction(1, 4), 1, 1)
    with pytest.raises(ContractError):
        bootstrap_uncap_to_quasiregular(family_of(6, lambda p: p[1] == 1), full(6), 1, 1, enforce=False)


def test_extra_agreement_examples():
    H = full(7)
    res = find_extra_agreements(H, H, 1, 2, Fraction(1, 16))
    assert res.pi == P([(1, 1)]) and res.searched == 1
    even = family_of(7, lambda p: sign(p) == 1)
    res = find_extra_agreements(even, even, 1, 2, Fraction(1, 16))
    assert all(r.verdict for r in res.regularity)
    assert res.retention == (1, 1)
    with pytest.raises(ContractError):
        find_extra_agreements(H, H, 1, 2, Fraction(3, 32))


def test_report_json_uses_exact_rationals():
    star = family_of(4, lambda p: p[0] == 0)
    js = check_quasiregular(star, 1, 4).to_json()
    assert js["attained"] == "4/1" and js["witness"] == [[1, 1]]


# --- invariants ---------------------------------------------------------------


@given(st.data())
def test_witnesses_reproduce_attained(data):
    n = data.draw(st.integers(3, 5))
    F = data.draw(families(n))
    if not F.members:
        return
    s = data.draw(st.integers(1, 2))
    eps = data.draw(st.fractions(0, 1, max_denominator=10))
    cap = check_captureable(F, s, eps)
    assert measure_avoiding(F, cap.attained_at) == cap.attained
    assert cap.verdict == (cap.witness is not None)
    reg = check_quasiregular(F, s, data.draw(st.fractions(1, 4, max_denominator=10)))
    assert measure_extending(F, reg.attained_at) / F.measure() == reg.attained
    assert reg.verdict == (reg.witness is None)


@given(st.data())
def test_quasirandom_is_monotone_in_order(data):
    n = data.draw(st.integers(3, 5))
    F = data.draw(families(n))
    if not F.members:
        return
    mu = F.measure()
    ratios = [restricted_variance(F, r) / (mu * mu) for r in range(1, n)]
    assert ratios == sorted(ratios)


def test_quasiregular_to_quasirandom_suite():
    rng = random.Random(100)
    passed = 0
    while passed < 100:
        F = PermFamily.of(5, [p for p in all_permutations(5) if rng.random() < rng.uniform(0.4, 0.95)])
        if not F.members:
            continue
        eps = check_quasiregular(F, 1, 2).attained - 1
        if not 0 <= eps < 1:
            continue
        assert quasiregular_implies_quasirandom_check(F, 1, eps).passed
        passed += 1


def test_quasiregular_to_uncaptureable_suite():
    rng = random.Random(101)
    checked = 0
    while checked < 30:
        H = PermFamily.of(5, [p for p in all_permutations(5) if rng.random() < 0.85])
        beta = check_quasiregular(H, 1, 2).attained
        if beta > Fraction(5, 4):
            continue
        delta = H.measure() * Fraction(9, 10)
        assert quasiregular_implies_uncaptureable_check(H, Fraction(5, 4), delta, 2).passed
        checked += 1


def test_quasirandom_to_algebraic_bound():
    rng = random.Random(102)
    for n in (4, 5):
        for _ in range(5):
            f = FunctionOnSn.indicator(PermFamily.of(n, [p for p in all_permutations(n) if rng.random() < 0.5]))
            for r in (1, 2):
                assert quasirandom_implies_algebraic_check(f, r).passed


@given(st.data())
def test_bootstraps_preserve_agreement_count(data):
    n = 6
    a = data.draw(st.integers(1, 6))
    b = data.draw(st.integers(1, 6))
    F1 = full(n, (P([(1, a)]),), (P([(2, b)]),) if b != a else ())
    F2 = full(n, (P([(2, b)]),), (P([(1, a)]),))
    if b == a and (0, a - 1) not in F2.ambient.forbidden:
        return
    res = bootstrap_uncap_to_quasiregular(F1, F2, 1, 1, enforce=False)
    assert res.postconditions["agreement count preserved"]
    assert check_quasiregular(res.F1, 1, Surd.sqrt(24)).verdict

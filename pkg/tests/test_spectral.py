import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permjunta.errors import ContractError, DegenerateInputError
from permjunta.perm import (
    PartialBijection,
    PermFamily,
    RestrictionClass,
    all_permutations,
    cycle_permutation,
    identity,
    is_t_intersecting,
    sign,
)
from permjunta.rep_theory import derangement_eigenvalue, partitions_of
from permjunta.spectral import (
    FunctionOnSn,
    apply_derangement_operator,
    bilinear_profile,
    cross_disagreement_pairing,
    is_algebraically_quasirandom,
    projection_inner,
    projection_norm_sq,
    spectral_profile,
    verify_spectral_gap_argument,
)

from conftest import families, family_of


def star4():
    return FunctionOnSn.indicator(family_of(4, lambda p: p[0] == 0))


@st.composite
def sparse_functions(draw, n, max_support=40):
    perms = all_permutations(n)
    k = draw(st.integers(0, min(max_support, len(perms))))
    idx = draw(st.lists(st.integers(0, len(perms) - 1), min_size=k, max_size=k, unique=True))
    vals = draw(st.lists(st.fractions(0, 1, max_denominator=7), min_size=k, max_size=k))
    return FunctionOnSn(n, {perms[i]: v for i, v in zip(idx, vals)})


def test_projection_examples():
    one = FunctionOnSn.constant(4, 1)
    prof = spectral_profile(one)
    assert prof.norms[(4,)] == 1 and all(v == 0 for a, v in prof.norms.items() if a != (4,))
    f = star4()
    assert projection_norm_sq(f, (4,)) == Fraction(1, 16)
    assert projection_norm_sq(f, (3, 1)) == Fraction(3, 16)
    assert all(projection_norm_sq(f, a) == 0 for a in ((2, 2), (2, 1, 1), (1, 1, 1, 1)))
    assert spectral_profile(f).total() == f.norm_sq() == Fraction(1, 4)


def test_profile_examples():
    c = Fraction(2, 5)
    prof = spectral_profile(FunctionOnSn.constant(4, c))
    assert {a: v for a, v in prof.norms.items() if v} == {(4,): c * c}
    even = FunctionOnSn.indicator(family_of(4, lambda p: sign(p) == 1))
    assert {a: v for a, v in spectral_profile(even).norms.items() if v} == {
        (4,): Fraction(1, 4),
        (1, 1, 1, 1): Fraction(1, 4),
    }


def test_two_projection_routes_agree():
    rng = random.Random(5)
    for n in (4, 5):
        F = PermFamily.of(n, [p for p in all_permutations(n) if rng.random() < 0.3])
        f = FunctionOnSn.indicator(F)
        for alpha in partitions_of(n):
            assert projection_norm_sq(f, alpha, route="pair") == projection_norm_sq(f, alpha, route="tabloid")


def test_derangement_operator_examples():
    one = FunctionOnSn.constant(4, 1)
    assert apply_derangement_operator(one).values == one.values
    delta = FunctionOnSn(4, {identity(4): 1})
    A = apply_derangement_operator(delta)
    assert len(A.values) == 9
    assert all(v == Fraction(1, 9) and sum(a == b for a, b in zip(p, range(4))) == 0 for p, v in A.values.items())


def test_pairing_examples():
    f = star4()
    assert cross_disagreement_pairing(f, f) == 0
    four_cycle = cycle_permutation(4, [0, 1, 2, 3])
    g = FunctionOnSn(4, {identity(4): 1})
    h = FunctionOnSn(4, {four_cycle: 1})
    assert cross_disagreement_pairing(g, h) == Fraction(1, 24 * 9)
    assert g.inner(apply_derangement_operator(h)) == Fraction(1, 24 * 9)
    one = FunctionOnSn.constant(4, 1)
    assert cross_disagreement_pairing(one, one) == 1


def test_algebraic_quasirandom_examples():
    c = FunctionOnSn.constant(5, Fraction(1, 3))
    assert is_algebraically_quasirandom(c, 2, 0).verdict
    rep = is_algebraically_quasirandom(star4(), 1, Fraction(99, 100))
    assert not rep.verdict and rep.witness == (3, 1) and rep.attained == 1
    assert is_algebraically_quasirandom(star4(), 1, 1).verdict
    with pytest.raises(DegenerateInputError):
        is_algebraically_quasirandom(FunctionOnSn(4, {}), 1, 1)


def test_dense_random_family_is_nearly_algebraically_quasirandom():
    rng = random.Random(21)
    f = FunctionOnSn.indicator(PermFamily.of(5, [p for p in all_permutations(5) if rng.random() < 0.5]))
    rep = is_algebraically_quasirandom(f, 1, Fraction(1, 10))
    mean = f.mean()
    assert rep.ratios[(4, 1)] == projection_norm_sq(f, (4, 1)) / (4 * mean * mean)
    assert rep.verdict


def test_spectral_gap_examples():
    f = star4()
    rep = verify_spectral_gap_argument(f, f, 1)
    assert rep.mean_product == Fraction(1, 16)
    assert rep.terms[(3, 1)] == Fraction(-1, 16)
    assert rep.balanced and rep.ok
    one = FunctionOnSn.constant(4, 1)
    with pytest.raises(ContractError):
        verify_spectral_gap_argument(one, one, 1)


def test_spectral_gap_on_intersecting_families_in_s5():
    rng = random.Random(8)
    star = family_of(5, lambda p: p[0] == 0)
    for _ in range(10):
        F1 = PermFamily.of(5, [p for p in star.members if rng.random() < 0.7])
        F2 = PermFamily.of(5, [p for p in star.members if rng.random() < 0.7])
        rep = verify_spectral_gap_argument(FunctionOnSn.indicator(F1), FunctionOnSn.indicator(F2), 1)
        assert rep.ok


def test_spectral_requires_trivial_ambient():
    amb = RestrictionClass(4, (PartialBijection(((0, 0),)),))
    g = FunctionOnSn.constant(4, 1, amb)
    with pytest.raises(ContractError):
        spectral_profile(g)
    with pytest.raises(ContractError):
        FunctionOnSn(4, {identity(4): 2})


# --- invariants ---------------------------------------------------------------


@pytest.mark.parametrize("n", (4, 5, 6))
@given(data=st.data())
def test_parseval(n, data):
    f = data.draw(sparse_functions(n))
    assert sum(bilinear_profile(f, f).values(), Fraction(0)) == f.norm_sq()


@given(st.data())
def test_operator_matches_eigen_decomposition(data):
    n = data.draw(st.integers(3, 5))
    f = data.draw(sparse_functions(n, 30))
    g = data.draw(sparse_functions(n, 30))
    Ag = apply_derangement_operator(g)
    lhs = f.inner(Ag)
    inner = bilinear_profile(f, g)
    assert lhs == sum(derangement_eigenvalue(a) * inner[a] for a in partitions_of(n))
    assert lhs == apply_derangement_operator(f).inner(g)
    assert lhs == cross_disagreement_pairing(f, g)
    assert inner == {a: projection_inner(f, g, a, route="tabloid") for a in partitions_of(n)}


@given(st.data())
def test_operator_preserves_mean(data):
    n = data.draw(st.integers(2, 6))
    f = data.draw(sparse_functions(n))
    assert apply_derangement_operator(f).mean() == f.mean()


@given(st.data())
def test_zero_pairing_iff_intersecting(data):
    n = data.draw(st.integers(2, 6))
    F = data.draw(families(n, max_density=data.draw(st.sampled_from([0.05, 0.2, 1.0]))))
    f = FunctionOnSn.indicator(F)
    assert (cross_disagreement_pairing(f, f) == 0) == is_t_intersecting(F, 1)


@given(st.data())
def test_intersecting_star_subfamilies_balance(data):
    n = data.draw(st.integers(3, 5))
    F = data.draw(families(n, max_density=0.8))
    F = PermFamily.of(n, [p for p in F.members if p[0] == 0])
    G = PermFamily.of(n, [p for p in data.draw(families(n)).members if p[0] == 0])
    f, g = FunctionOnSn.indicator(F), FunctionOnSn.indicator(G)
    r = data.draw(st.integers(1, n - 1))
    rep = verify_spectral_gap_argument(f, g, r)
    assert rep.balanced and rep.cauchy_schwarz_ok and rep.low_block_ok

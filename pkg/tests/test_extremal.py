import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permjunta.errors import ContractError, ResourceLimitError
from permjunta.extremal import (
    build_agreement_graph,
    conjecture_family,
    conjecture_family_size,
    conjecture_table,
    count_agreeing_in_star,
    degree_formula,
    diagonalized_spectrum,
    hoffman_bound,
    is_intersection_free_via_graph,
    max_independent_family,
    predicted_spectrum,
    search_extremal,
    stability_gap,
    star_count_formula,
    turan_baseline,
)
from permjunta.perm import PartialBijection, PermFamily, all_permutations, fixed_points, is_intersection_free

from conftest import families, permutations_of

P = PartialBijection.from_one_based

# exact maxima for forbidden agreement count a, by brute force at n <= 5
EXACT = {
    (2, 0): 1, (3, 0): 2, (4, 0): 6, (5, 0): 24,
    (3, 1): 3, (4, 1): 8, (5, 1): 13,
    (4, 2): 12, (5, 2): 20,
}


@pytest.mark.parametrize("n", range(1, 8))
def test_degree_formula_matches_enumeration(n):
    perms = all_permutations(n)
    for a in range(n + 1):
        assert degree_formula(n, a) == sum(fixed_points(p) == a for p in perms)


@pytest.mark.parametrize("n,a", sorted(EXACT))
def test_search_values(n, a):
    res = search_extremal(n, a)
    assert res.size == EXACT[(n, a)] == len(res.witness)
    assert is_intersection_free(res.witness, a)
    assert res.hoffman >= res.size and res.turan <= res.size


def test_hoffman_tight_except_one_case():
    for (n, a), size in EXACT.items():
        res = search_extremal(n, a)
        assert res.tight == ((n, a) != (5, 1))
    assert hoffman_bound(build_agreement_graph(5, 1)) == 30


def test_symmetry_reduction_does_not_change_the_answer():
    for n, a in ((4, 0), (4, 1), (4, 2)):
        g = build_agreement_graph(n, a)
        assert max_independent_family(g, symmetry=True)[0] == max_independent_family(g, symmetry=False)[0]
    g = build_agreement_graph(5, 0)
    assert max_independent_family(g, threads=3)[0] == 24


def test_intersecting_extremal_family_is_a_coset():
    for n in (3, 4, 5):
        res = search_extremal(n, 0)
        star, gap = stability_gap(res.witness, 1)
        assert gap == 0 and len(star) == 1


def test_edgeless_graph():
    g = build_agreement_graph(4, 4)
    assert g.edgeless and hoffman_bound(g) == 24
    assert max_independent_family(g)[0] == 24


def test_diagonalization_matches_characters():
    for n in range(2, 6):
        for a in range(n - 1):
            g = build_agreement_graph(n, a)
            assert np.allclose(diagonalized_spectrum(g), predicted_spectrum(g), atol=1e-9)


def test_turan_baseline():
    g = build_agreement_graph(4, 0)
    assert turan_baseline(g) == Fraction(24, 10)


def test_resource_limits():
    with pytest.raises(ResourceLimitError):
        search_extremal(6, 0)
    with pytest.raises(ResourceLimitError):
        build_agreement_graph(9, 0)
    with pytest.raises(ContractError):
        build_agreement_graph(4, 5)


@pytest.mark.slow
def test_long_running_n6():
    res = search_extremal(6, 0, long_running=True)
    assert res.size == 120 and res.tight


@given(st.data())
def test_graph_and_direct_checks_agree(data):
    n = data.draw(st.integers(2, 5))
    F = data.draw(families(n, max_density=data.draw(st.sampled_from([0.02, 0.1, 0.5]))))
    a = data.draw(st.integers(0, n - 1))
    assert is_intersection_free_via_graph(F, a) == is_intersection_free(F, a)


def test_graph_check_on_independent_and_dependent_families():
    star = PermFamily.of(5, [p for p in all_permutations(5) if p[0] == 0])
    assert is_intersection_free_via_graph(star, 0)
    assert not is_intersection_free_via_graph(star, 1)


@given(st.data())
def test_star_count_bounds_brute_force(data):
    n = data.draw(st.integers(2, 8))
    t = data.draw(st.integers(1, min(3, n)))
    rho = data.draw(permutations_of(n))
    if all(rho[i] == i for i in range(t)):
        return
    c = count_agreeing_in_star(rho, t, n)
    assert c.formula <= c.brute_force
    assert c.formula == star_count_formula(n, t, c.fixed_in_star, c.outside_preimages)


def test_star_count_examples():
    # t = 1 and rho(1) != 1: agreeing in no place inside the star
    c = count_agreeing_in_star((1, 0, 2, 3), 1, 4)
    assert c.brute_force == sum(
        1 for tail in itertools.permutations(range(1, 4)) if all(y != (1, 0, 2, 3)[i] for i, y in enumerate(tail, 1))
    )
    with pytest.raises(ContractError):
        count_agreeing_in_star((0, 1, 2), 2, 3)


def test_conjecture_sizes_two_ways():
    for n in range(3, 8):
        for t in (1, 2):
            assert conjecture_table(n, t, "enumerate") == conjecture_table(n, t, "inclusion-exclusion")
    assert conjecture_table(7, 2) == [(0, 120), (1, 78), (2, 52)]
    assert conjecture_family_size(10, 2, 0, "inclusion-exclusion") == math.factorial(8)


def test_conjecture_family_is_t_intersecting():
    for n, t, i in ((5, 1, 1), (6, 2, 1), (6, 2, 2)):
        F = conjecture_family(n, t, i)
        assert all(is_intersection_free(F, a) for a in range(t))
    with pytest.raises(ContractError):
        conjecture_family(5, 2, 2)


def test_stability_examples():
    rng = random.Random(3)
    star = [p for p in all_permutations(5) if p[1] == 2]
    noise = [p for p in all_permutations(5) if p[1] != 2 and rng.random() < 0.05]
    F = PermFamily.of(5, star + noise)
    best, gap = stability_gap(F, 1)
    assert best == P([(2, 3)]) and gap == len(noise)
    assert stability_gap(PermFamily.of(4, []), 1)[1] == 0

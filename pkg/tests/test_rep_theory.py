import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permjunta.errors import ResourceLimitError
from permjunta.perm import all_permutations, cycle_type, derangements, sign
from permjunta.rep_theory import (
    character_inner_product,
    class_sign,
    class_size,
    conjugacy_classes,
    count_standard_tableaux,
    derangement_count,
    derangement_eigenvalue,
    dimension_hook,
    eigenvalue_bound_check,
    expansion_weight,
    irreducible_character,
    kostka,
    largest_part_at_least,
    lex_ge,
    mn_character_value,
    nontrivial_largest_part_at_least,
    parse_partition,
    partition_str,
    partitions_of,
    permutation_character,
    signed_derangement_sum,
    spectrum,
    transpose,
)

from conftest import partitions


def test_partition_examples():
    assert partitions_of(4) == ((4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1))
    assert largest_part_at_least(4, 3) == ((4,), (3, 1))
    assert nontrivial_largest_part_at_least(4, 3) == ((3, 1),)
    assert transpose((3, 2, 2)) == (3, 3, 1)
    assert parse_partition("3+2+2") == (3, 2, 2)
    assert partition_str((3, 2, 2)) == "3+2+2"
    with pytest.raises(ValueError):
        parse_partition("1+2")


def test_dimension_examples():
    assert dimension_hook((3, 1)) == 3
    assert dimension_hook((3, 2, 2)) == 21 == count_standard_tableaux((3, 2, 2))
    assert dimension_hook((7,)) == 1
    assert count_standard_tableaux((2, 2)) == 2
    assert count_standard_tableaux((1, 1, 1)) == 1
    assert count_standard_tableaux((2, 1)) == 2
    with pytest.raises(ResourceLimitError):
        count_standard_tableaux((13,))


def test_kostka_examples():
    assert kostka((2, 1), (1, 1, 1)) == 2
    assert kostka((3, 1), (2, 1, 1)) == 2
    assert all(kostka(lam, lam) == 1 for lam in partitions_of(5))


def test_permutation_character_examples():
    assert permutation_character((3, 1), (2, 1, 1)) == 2
    assert permutation_character((2, 2), (1, 1, 1, 1)) == 6
    assert permutation_character((2, 2), (2, 2)) == 2


def test_character_examples():
    assert irreducible_character((3, 1))((4,)) == -1
    assert all(v == 1 for v in irreducible_character((5,)).values.values())
    for a in partitions_of(5):
        for b in partitions_of(5):
            ip = character_inner_product(irreducible_character(a), irreducible_character(b))
            assert ip == (1 if a == b else 0)


def test_derangement_examples():
    assert derangement_count(4) == 9
    assert derangement_count(1) == 0
    assert derangement_count(0) == 1
    assert signed_derangement_sum(4) == -3
    for m in range(1, 9):
        assert signed_derangement_sum(m) == (-1) ** (m - 1) * (m - 1)
    for m in range(1, 8):
        assert derangement_count(m) == len(derangements(m))


def test_eigenvalue_examples():
    assert derangement_eigenvalue((4,)) == 1
    assert derangement_eigenvalue((1, 1, 1, 1)) == Fraction(-1, 3)
    assert derangement_eigenvalue((3, 1)) == Fraction(-1, 3)
    for n in range(3, 8):
        assert derangement_eigenvalue((n - 1, 1)) == Fraction(-1, n - 1)


def test_eigenvalue_bound_examples():
    rep = eigenvalue_bound_check(4, 1)
    assert rep.ok
    assert rep.eigenvalues[(3, 1)] == Fraction(-1, 3)
    assert rep.max_below == max(abs(rep.eigenvalues[a]) for a in ((2, 2), (2, 1, 1), (1, 1, 1, 1)))
    assert rep.max_above == Fraction(1, 3)
    for n in range(2, 10):
        assert eigenvalue_bound_check(n, 1).ok


# --- invariants ---------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 9))
def test_hook_formula_matches_tableau_count(n):
    for lam in partitions_of(n):
        assert dimension_hook(lam) == count_standard_tableaux(lam)


@pytest.mark.parametrize("n", range(1, 13))
def test_squared_dimensions_sum_to_group_order(n):
    assert sum(dimension_hook(lam) ** 2 for lam in partitions_of(n)) == math.factorial(n)


@given(partitions(1, 10))
def test_transpose_preserves_dimension(lam):
    assert transpose(transpose(lam)) == lam
    assert dimension_hook(transpose(lam)) == dimension_hook(lam)


@pytest.mark.parametrize("n", range(1, 7))
def test_orthonormality_and_column_orthogonality(n):
    chars = [irreducible_character(a) for a in partitions_of(n)]
    for i, a in enumerate(chars):
        for j, b in enumerate(chars):
            assert character_inner_product(a, b) == (i == j)
    order = math.factorial(n)
    for c in conjugacy_classes(n):
        for d in conjugacy_classes(n):
            col = sum(chi(c) * chi(d) for chi in chars)
            assert col == (order // class_size(c) if c == d else 0)


@pytest.mark.parametrize("n", range(1, 6))
def test_young_rule_values(n):
    for beta in partitions_of(n):
        for c in conjugacy_classes(n):
            rhs = sum(
                kostka(lam, beta) * irreducible_character(lam)(c) for lam in partitions_of(n) if lex_ge(lam, beta)
            )
            assert permutation_character(beta, c) == rhs


@pytest.mark.parametrize("n", range(1, 7))
def test_transpose_twists_by_sign(n):
    for lam in partitions_of(n):
        chi, chit = irreducible_character(lam), irreducible_character(transpose(lam))
        for c in conjugacy_classes(n):
            assert chit(c) == class_sign(c) * chi(c)


@pytest.mark.parametrize("n", range(2, 9))
def test_trace_of_normalized_adjacency_vanishes(n):
    assert sum(dimension_hook(a) ** 2 * derangement_eigenvalue(a) for a in partitions_of(n)) == 0


@given(partitions(1, 8), st.data())
def test_two_character_routes_agree(lam, data):
    c = data.draw(st.sampled_from(conjugacy_classes(sum(lam))))
    assert irreducible_character(lam)(c) == mn_character_value(lam, c)
    assert irreducible_character(lam)((1,) * sum(lam)) == dimension_hook(lam)


@given(partitions(1, 9))
def test_kostka_is_unitriangular(lam):
    for mu in partitions_of(sum(lam)):
        k = kostka(lam, mu)
        if not lex_ge(lam, mu):
            assert k == 0
        assert k >= 0


def test_class_sizes_match_enumeration():
    for n in range(1, 7):
        counts = {}
        for p in all_permutations(n):
            counts[cycle_type(p)] = counts.get(cycle_type(p), 0) + 1
        assert counts == {c: class_size(c) for c in conjugacy_classes(n)}
        assert all(class_sign(cycle_type(p)) == sign(p) for p in all_permutations(n))


def test_spectrum_rows_and_ceiling():
    rows = spectrum(4)
    assert [r.partition for r in rows] == list(partitions_of(4))
    assert rows[0].eigenvalue == 1 and rows[1].f_alpha == 3
    with pytest.raises(ResourceLimitError):
        spectrum(9)


def test_expansion_weight_is_factorial_bounded():
    for n in range(2, 8):
        for lam in partitions_of(n):
            assert 1 <= expansion_weight(lam) <= math.factorial(len(lam))


def test_character_resource_limit():
    with pytest.raises(ResourceLimitError):
        irreducible_character((1,) * 10)
    assert irreducible_character((8, 1, 1))((1,) * 10) == dimension_hook((8, 1, 1))

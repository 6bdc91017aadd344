"""Library outputs against the frozen brute-force oracle values in data/oracles.json."""

from fractions import Fraction

import numpy as np
import pytest

from permjunta.extremal import (
    build_agreement_graph,
    conjecture_family_size,
    count_agreeing_in_star,
    max_independent_family,
)
from permjunta.perm import PartialBijection, PermFamily, RestrictionClass, agreements
from permjunta.pseudorandom import check_quasiregular, restricted_variance
from permjunta.rep_theory import (
    derangement_count,
    derangement_eigenvalue,
    dimension_hook,
    irreducible_character,
    kostka,
    mn_character_value,
    partitions_of,
    permutation_character,
    signed_derangement_sum,
)
from permjunta.spectral import FunctionOnSn, spectral_profile

from conftest import family_of


def parse_key(text):
    return tuple(int(x) for x in text.split("+"))


def test_agreements(frozen):
    for a, b, want in frozen["agreements"]:
        assert agreements(a, b) == want == 2


def test_standard_tableaux_counts(frozen):
    for k, want in frozen["standard_tableaux"].items():
        assert dimension_hook(parse_key(k)) == want


def test_kostka(frozen):
    for k, want in frozen["kostka"].items():
        shape, content = (parse_key(x) for x in k.split("|"))
        assert kostka(shape, content) == want


def test_permutation_characters(frozen):
    for k, want in frozen["xi"].items():
        beta, c = (parse_key(x) for x in k.split("|"))
        assert permutation_character(beta, c) == want


@pytest.mark.parametrize("n", range(1, 7))
def test_character_table_both_routes(frozen, n):
    table = frozen["characters"][str(n)]
    for k, want in table.items():
        lam, c = (parse_key(x) for x in k.split("|"))
        assert irreducible_character(lam)(c) == want
        assert mn_character_value(lam, c) == want


def test_derangement_counts(frozen):
    for n, want in frozen["derangements"].items():
        assert derangement_count(int(n)) == want
    for m, want in frozen["signed_derangements"].items():
        assert signed_derangement_sum(int(m)) == want


def test_derangement_eigenvalues(frozen):
    for n, table in frozen["derangement_eigenvalues"].items():
        for k, want in table.items():
            assert derangement_eigenvalue(parse_key(k)) == Fraction(want)


@pytest.mark.parametrize("n", (3, 4, 5))
def test_eigenvalues_with_multiplicity_match_dense_spectrum(frozen, n):
    vals = []
    for lam in partitions_of(n):
        vals += [float(derangement_eigenvalue(lam) * derangement_count(n))] * dimension_hook(lam) ** 2
    assert np.allclose(sorted(vals), frozen["derangement_spectrum"][str(n)], atol=1e-8)


def test_projection_norms_of_star_and_sign(frozen):
    star = FunctionOnSn.indicator(family_of(4, lambda p: p[0] == 0))
    prof = spectral_profile(star)
    assert {lam: v for lam, v in prof.norms.items()} == {
        parse_key(k): Fraction(v) for k, v in frozen["star_projection_norms"].items()
    }
    even = FunctionOnSn.indicator(family_of(4, lambda p: _even(p)))
    assert spectral_profile(even).norms == {
        parse_key(k): Fraction(v) for k, v in frozen["sign_projection_norms"].items()
    }


def _even(p):
    return sum(1 for i in range(len(p)) for j in range(i) if p[j] > p[i]) % 2 == 0


def test_star_ratio_and_variance(frozen):
    F = family_of(4, lambda p: p[0] == 0)
    assert check_quasiregular(F, 1, 5).attained == Fraction(frozen["star_worst_ratio_s1"])
    assert restricted_variance(F, 1) == Fraction(frozen["star_variance_r1"])


def test_dense_family_values(frozen):
    d = frozen["dense_family_s5"]
    F = PermFamily.of(5, [tuple(p) for p in d["members"]])
    assert restricted_variance(F, 1) == Fraction(d["variance_r1"])
    assert check_quasiregular(F, 1, 10).attained == Fraction(d["worst_ratio_s1"])
    assert check_quasiregular(F, 2, 10).attained == Fraction(d["worst_ratio_s2"])


def test_max_families(frozen):
    for k, want in frozen["max_family_avoiding"].items():
        n, a = map(int, k.split("|"))
        size, _ = max_independent_family(build_agreement_graph(n, a))
        assert size == want


def test_star_counts(frozen):
    for n, t, rho, want in frozen["star_counts"]:
        c = count_agreeing_in_star(rho, t, n)
        assert c.brute_force == want
        assert c.formula <= want


def test_conjecture_sizes(frozen):
    for k, want in frozen["conjecture_sizes"].items():
        n, t, i = map(int, k.split("|"))
        assert conjecture_family_size(n, t, i, "enumerate") == want
        assert conjecture_family_size(n, t, i, "inclusion-exclusion") == want


def test_restriction_class_sizes(frozen):
    for n, agree, disagree, want in frozen["restriction_sizes"]:
        R = RestrictionClass(
            n,
            (PartialBijection(tuple(map(tuple, agree))),) if agree else (),
            (PartialBijection(tuple(map(tuple, disagree))),) if disagree else (),
        )
        assert R.size() == want
        assert R.size("enumerate") == want

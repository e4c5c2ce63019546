import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holofol.groups import (
    AllGeneratorsVanish,
    BudgetExceeded,
    GeneratorSet,
    TruncationDominates,
    classify_growth,
    cocycle_defect,
    derived_series,
    free_abelian_growth_formula,
    growth_function,
    integral_identity_defect,
    limit_homomorphism,
)
from holofol.jets import Jet, random_jet


def _lattice_count(m, n):
    """Brute-force count of Z^m points with l1 norm <= n."""
    if m == 0:
        return 1
    return sum(_lattice_count(m - 1, n - abs(a)) for a in range(-n, n + 1))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_free_abelian_formula_against_lattice_count(m):
    for n in range(7):
        assert free_abelian_growth_formula(m, n) == _lattice_count(m, n)


def test_free_abelian_formula_rejects_negative():
    with pytest.raises(ValueError):
        free_abelian_growth_formula(-1, 2)


def test_rank_two_closed_form():
    assert [free_abelian_growth_formula(2, n) for n in range(5)] == [2 * n * n + 2 * n + 1 for n in range(5)]


def _abelian(m, k=2):
    primes = [2, 3, 5, 7]
    return GeneratorSet.from_jets(
        [Jet.linear([[primes[i] if a == b == i else (1 if a == b else 0) for b in range(m)] for a in range(m)], k)
         for i in range(m)]
    )


def test_growth_independent_of_workers():
    S = GeneratorSet.from_jets([Jet.univariate([1, 1], 5), Jet.univariate([1, 0, 1], 5)])
    assert growth_function(S, 4).rows == growth_function(S, 4, workers=4).rows


def test_budget_exceeded_keeps_partial_table():
    S = GeneratorSet.from_jets([Jet.univariate([1, 1], 8), Jet.univariate([3, 0, 1], 8)])
    with pytest.raises(BudgetExceeded) as info:
        growth_function(S, 10, max_elements=200)
    table = info.value.table
    assert not table.complete
    assert table.gamma[-1] > 200
    assert table.gamma == sorted(table.gamma)


def test_finite_group_is_bounded():
    # z -> -z has order 2
    S = GeneratorSet.from_jets([Jet.univariate([-1], 3)])
    table = growth_function(S, 8)
    assert table.gamma == [1] + [2] * 8
    v = classify_growth(table)
    assert v.kind == "polynomial" and v.parameter == 0.0


def test_rank_two_growth_classified_quadratic():
    # the tail-half fit needs a longer table than n = 8 to sit well inside 2 +- 0.2
    v = classify_growth(growth_function(_abelian(2), 20))
    assert v.kind == "polynomial"
    assert abs(v.parameter - 2) <= 0.2


def test_free_like_pair_classified_exponential():
    S = GeneratorSet.from_jets([Jet.univariate([1, 1], 8), Jet.univariate([3, 0, 1], 8)])
    table = growth_function(S, 7)
    v = classify_growth(table)
    assert v.kind == "exponential"
    assert v.parameter > math.log(2)


def test_classification_needs_rows():
    table = growth_function(_abelian(1), 3)
    with pytest.raises(ValueError):
        classify_growth(table)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_growth_monotone_and_bounded(seed):
    rng = np.random.default_rng(seed)
    S = GeneratorSet.from_jets([random_jet(rng, 1, 3, span=2) for _ in range(2)])
    try:
        table = growth_function(S, 4, max_elements=3000)
    except BudgetExceeded as exc:
        table = exc.table
    gam = table.gamma
    assert all(b >= a for a, b in zip(gam, gam[1:]))
    assert all(g <= table.ball_bound(n) for n, g, _ in table.rows)


def test_derived_series_abelian_terminates_at_first_level():
    rep = derived_series(_abelian(2, 3))
    assert rep.terminating_level == 1


def test_derived_series_affine_group_is_metabelian():
    S = GeneratorSet.from_jets([Jet.univariate([2], 4), Jet.univariate([1, 1], 4)])
    rep = derived_series(S, max_depth=3)
    assert not rep.levels[1].trivial
    assert rep.terminating_level is not None and rep.terminating_level <= 3
    assert "terminates at" in rep.text()


def test_derived_series_cap_marks_inconclusive():
    S = GeneratorSet.from_jets([Jet.univariate([1, 1], 6), Jet.univariate([1, 0, 1], 6), Jet.univariate([1, 0, 0, 1], 6)])
    rep = derived_series(S, max_depth=2, cap=2)
    assert any(lv.inconclusive for lv in rep.levels)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(2, 5))
def test_cocycle_identity_exact(seed, n, k):
    rng = np.random.default_rng(seed)
    u = random_jet(rng, n, k, span=2, density=0.4, tangent_to_identity=True)
    v = random_jet(rng, n, k, span=2, density=0.4, tangent_to_identity=True)
    assert cocycle_defect(u, v) == Jet.zero(n, k)


def test_integral_identity_numerically():
    rng = np.random.default_rng(5)
    u = random_jet(rng, 2, 4, tangent_to_identity=True)
    v = random_jet(rng, 2, 4, tangent_to_identity=True)
    assert integral_identity_defect(u, v, [0.05 + 0.02j, -0.03j]) < 1e-12


def test_limit_homomorphism_worked_example():
    S = GeneratorSet.from_jets([Jet.univariate([1, 1], 4)], ["h"])
    est = limit_homomorphism(S, [[(0, 1)], [(0, -1)]], pairs=[(0, 1)])
    assert np.allclose(est.estimate("h"), [1.0, 0.0], atol=1e-12)
    assert np.allclose(est.estimate("h^-1"), [-1.0, 0.0], atol=3e-3)
    residual = est.additivity[0][2]
    assert residual[0] > residual[1] > residual[2]
    assert est.truncation_ratio[-1] < 1


def test_limit_homomorphism_rejects_non_tangent():
    with pytest.raises(ValueError):
        limit_homomorphism(GeneratorSet.from_jets([Jet.univariate([2], 3)]), [[(0, 1)]])


def test_limit_homomorphism_vanishing_generators():
    with pytest.raises(AllGeneratorsVanish):
        limit_homomorphism(GeneratorSet.from_jets([Jet.identity(1, 3)]), [[(0, 1)]])


def test_limit_homomorphism_truncation_dominates():
    # far from the origin the unseen order-(k+1) terms outweigh the displacement
    S = GeneratorSet.from_jets([Jet.univariate([1, 0, 0, 1], 4)])
    with pytest.raises(TruncationDominates):
        limit_homomorphism(S, [[(0, 1)]], ms=(1, 2), z0=[4.0])


def test_word_jet_applies_right_to_left():
    S = GeneratorSet.from_jets([Jet.univariate([2], 3), Jet.univariate([1, 1], 3)], ["a", "b"])
    # "a*b" is a o b: z + z^2 then doubled
    assert S.word_jet([(0, 1), (1, 1)]) == Jet.univariate([2, 2], 3)
    assert S.format_word([(0, 1), (1, -1)]) == "a*b^-1"

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SAMPLES
from holofol.germs import (
    CallableGerm,
    LeftDomain,
    NewtonInverse,
    PolynomialGerm,
    PseudoGroup,
    Word,
    disk_mesh,
    evaluate_word,
    find_hyperbolic_fixed_points,
    linear_germ,
    orbit_density_probe,
    reduced_words,
    richardson_derivative,
    word_derivative,
    word_multiplier,
)
from holofol.io import load_json, parse_family

letters = st.tuples(st.integers(0, 2), st.sampled_from([1, -1]))
words = st.lists(letters, max_size=8).map(lambda ls: Word(tuple(ls)))


@given(words)
def test_word_times_inverse_reduces_to_empty(w):
    assert len((w * w.inverse()).reduced()) == 0


@given(words)
def test_reduction_is_idempotent(w):
    r = w.reduced()
    assert r.is_reduced() and r.reduced() == r


@pytest.mark.parametrize("m,L", [(1, 4), (2, 3), (3, 2)])
def test_reduced_word_count(m, L):
    got = sum(1 for w in reduced_words(m, L, L))
    assert got == 2 * m * (2 * m - 1) ** (L - 1)


def test_word_labels_and_power_detection():
    w = Word.of((0, 1), (1, -1))
    assert w.label(["f", "g"]) == "f*g^-1"
    assert w.compact() == "1+ 2-"
    assert Word.of((0, 1), (0, 1)).is_proper_power()
    assert not w.is_proper_power()


def test_words_apply_right_to_left():
    f = PolynomialGerm([2.0], "f")
    g = PolynomialGerm([1.0, 1.0], "g")
    G = PseudoGroup([f, g], 10.0)
    z = 0.1
    assert evaluate_word(G, Word.of((0, 1), (1, 1)), z) == pytest.approx(2 * (z + z * z))
    val, der = word_derivative(G, Word.of((0, 1), (1, 1)), np.array([z]))
    assert der[0] == pytest.approx(2 * (1 + 2 * z))


def test_left_domain_names_the_step():
    G = PseudoGroup([linear_germ(3.0, "f")], 1.0)
    with pytest.raises(LeftDomain) as info:
        evaluate_word(G, Word.of((0, 1), (0, 1)), 0.2)
    assert info.value.step == 1


def test_newton_inverse_round_trip():
    g = PolynomialGerm([0.7 + 0.2j, 1.0, -0.5])
    z = np.array([0.01, 0.05j, -0.03 + 0.02j])
    assert np.allclose(g.inverse()(g(z)), z, atol=1e-13)
    assert isinstance(g.inverse(), NewtonInverse)


def test_callable_germ_uses_supplied_inverse():
    f = CallableGerm(lambda z: 2 * z, lambda z: 2 + 0 * z, CallableGerm(lambda z: z / 2))
    assert f.inverse()(f(0.3)) == pytest.approx(0.3)
    assert f.multiplier == pytest.approx(2)


def test_richardson_derivative_accuracy():
    est = richardson_derivative(np.exp, 0.1 + 0.2j, 1e-2)
    assert abs(est.value - np.exp(0.1 + 0.2j)) < 1e-10
    assert est.error < 1e-6


def test_word_multiplier_matches_chain_rule():
    G = PseudoGroup([PolynomialGerm([0.5, 1.0]), PolynomialGerm([2.0, 0.0, 1.0])], 1.0)
    w = Word.of((0, 1), (1, -1))
    _, der = word_derivative(G, w, np.array([0.05]))
    assert abs(word_multiplier(G, w, 0.05).value - der[0]) < 1e-9


def test_linear_contraction_fixed_point():
    G = PseudoGroup([linear_germ(0.5, "f")], 1.0)
    search = find_hyperbolic_fixed_points(G, 2)
    # f^2 is a proper power and skipped; f and f^-1 share the origin
    assert [r.label for r in search.records] == ["f", "f^-1"]
    assert all(abs(r.location) < 1e-14 for r in search.records)
    assert "records=2" in search.summary()


def test_rotation_fixed_point_is_not_hyperbolic():
    G = PseudoGroup([linear_germ(np.exp(2j * np.pi * 0.3), "r")], 1.0)
    search = find_hyperbolic_fixed_points(G, 1)
    assert not search.records and search.non_hyperbolic >= 1


def test_fixed_point_search_independent_of_workers():
    G = parse_family(load_json(SAMPLES / "family.json")).group
    a = find_hyperbolic_fixed_points(G, 2, (0.05, 0.5))
    b = find_hyperbolic_fixed_points(G, 2, (0.05, 0.5), workers=3)
    assert [(r.label, r.location) for r in a.records] == [(r.label, r.location) for r in b.records]
    for r in a.records:
        assert r.residual <= 1e-12 and abs(abs(r.multiplier) - 1) > 1e-3


def test_disk_mesh_spacing():
    mesh = disk_mesh(1.0, 0.1)
    assert np.all(np.abs(mesh) <= 1 + 1e-12)
    assert 0 in mesh
    assert abs(len(mesh) - math.pi / 0.01) < 0.1 * len(mesh)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 3000), min_size=1, max_size=5))
def test_coverage_monotone_and_reproducible(seed, budgets):
    G = parse_family(load_json(SAMPLES / "family.json")).group
    a = orbit_density_probe(G, 0.5, budgets, 0.05, seed=seed)
    b = orbit_density_probe(G, 0.5, budgets, 0.05, seed=seed, workers=2)
    covs = [c for _, c in a.rows]
    assert covs == sorted(covs)
    assert a.rows == b.rows


def test_probe_radius_must_fit_domain():
    G = PseudoGroup([linear_germ(0.5)], 0.5)
    with pytest.raises(ValueError):
        orbit_density_probe(G, 1.0, [10], 0.1)


def test_hyperbolic_linear_orbit_does_not_fill_disk():
    G = PseudoGroup([linear_germ(0.9 * np.exp(0.3j))], 1.0)
    rep = orbit_density_probe(G, 0.5, [5000], 0.02, seed=1)
    assert rep.coverage(5000) < 0.5

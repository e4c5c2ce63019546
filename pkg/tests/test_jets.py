import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holofol.exact import cq
from holofol.jets import (
    DimensionMismatch,
    Jet,
    SingularLinearPart,
    commutator,
    jet_compose,
    jet_inverse,
    random_jet,
    truncate,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 2)
orders = st.integers(1, 5)


def _jet(seed, n, k, tangent=False):
    return random_jet(np.random.default_rng(seed), n, k, span=2, density=0.3, tangent_to_identity=tangent)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, orders)
def test_composition_is_associative(seed, n, k):
    f, g, h = (_jet(seed + i, n, k) for i in range(3))
    assert jet_compose(jet_compose(f, g), h) == jet_compose(f, jet_compose(g, h))


@settings(max_examples=40, deadline=None)
@given(seeds, dims, orders)
def test_inverse_round_trip(seed, n, k):
    f = _jet(seed, n, k)
    e = Jet.identity(n, k)
    fi = jet_inverse(f)
    assert jet_compose(f, fi) == e
    assert jet_compose(fi, f) == e
    assert jet_inverse(fi) == f


@settings(max_examples=30, deadline=None)
@given(seeds, dims, orders)
def test_identity_is_neutral(seed, n, k):
    f = _jet(seed, n, k)
    e = Jet.identity(n, k)
    assert jet_compose(e, f) == f == jet_compose(f, e)


@settings(max_examples=20, deadline=None)
@given(seeds, orders)
def test_composition_agrees_with_numeric_evaluation_to_truncation_order(seed, k):
    f, g = _jet(seed, 1, k), _jet(seed + 1, 1, k)
    z = np.array([1e-3 + 2e-3j])
    lhs = jet_compose(f, g).evaluate(z)
    rhs = f.evaluate(g.evaluate(z))
    assert abs(lhs - rhs).max() <= 1e3 * abs(z[0]) ** (k + 1)


def test_tangent_to_identity_is_closed_under_composition():
    rng = np.random.default_rng(0)
    for _ in range(10):
        u = random_jet(rng, 2, 4, tangent_to_identity=True)
        v = random_jet(rng, 2, 4, tangent_to_identity=True)
        assert jet_compose(u, v).is_tangent_to_identity()
        assert jet_inverse(u).is_tangent_to_identity()


def test_commuting_linear_jets_have_trivial_commutator():
    a = Jet.linear([[2, 0], [0, 3]], 3)
    b = Jet.linear([[5, 0], [0, 7]], 3)
    assert commutator(a, b).is_identity()


def test_noncommuting_pair_has_nontrivial_commutator():
    a = Jet.univariate([1, 1], 4)
    b = Jet.univariate([2], 4)
    assert not commutator(a, b).is_identity()


def test_inverse_of_z_plus_z_squared():
    h = Jet.univariate([1, 1], 4)
    # z - z^2 + 2 z^3 - 5 z^4 (Catalan numbers with alternating signs)
    assert jet_inverse(h) == Jet.univariate([1, -1, 2, -5], 4)


def test_mismatched_dimensions_rejected():
    with pytest.raises(DimensionMismatch):
        jet_compose(Jet.identity(1, 3), Jet.identity(2, 3))
    with pytest.raises(DimensionMismatch):
        jet_compose(Jet.identity(1, 3), Jet.identity(1, 4))


def test_singular_linear_part_rejected():
    with pytest.raises(SingularLinearPart):
        jet_inverse(Jet.univariate([0, 1], 3))


def test_truncate_drops_high_terms():
    f = Jet.univariate([1, 1, 1, 1], 4)
    assert truncate(f, 2) == Jet.univariate([1, 1], 2)


def test_tilde_and_arithmetic():
    f = Jet.univariate([1, cq(1, 1)], 3)
    assert f.tilde() == Jet.univariate([0, cq(1, 1)], 3)
    assert (f - f) == Jet.zero(1, 3)
    assert (f + Jet.zero(1, 3)) == f


def test_jacobian_of_linear_jet():
    a = Jet.linear([[1, 2], [3, 4]], 2)
    assert np.allclose(a.jacobian(np.array([0.3, -0.1])), [[1, 2], [3, 4]])

import math

import numpy as np
import pytest
from fractions import Fraction

from conftest import SAMPLES
from holofol.exact import cq
from holofol.foliation import LineNotInvariant, validate_normal_form
from holofol.germs import LeftDomain, rotation_multiplier
from holofol.holonomy import (
    HolonomyMap,
    LoopError,
    LoopPath,
    MultipleRoot,
    Segment,
    TransverseDisk,
    auto_base_point,
    canonical_loops,
    chart_field,
    check_disk,
    common_radius,
    holonomy_generators,
    lift_path,
    polynomial_surrogate,
    surrogate_group,
    variational_multiplier,
)
from holofol.io import load_json, parse_foliation
from holofol.polynomial import BivariatePolynomial as BP


@pytest.fixture(scope="module")
def x2():
    return holonomy_generators(parse_foliation(load_json(SAMPLES / "degree2_x2.json")), radius=1e-2)


@pytest.fixture(scope="module")
def linear():
    return parse_foliation(load_json(SAMPLES / "linear_oracle.json"))


def test_loop_geometry():
    lp = LoopPath.circle(2.0, 0j, 0.5, 1, "a")
    assert lp.is_closed() and lp.base == 2.0
    assert lp.winding_number(0j) == 1
    assert lp.reversed().winding_number(0j) == -1
    assert LoopPath.circle(2.0, 0j, 0.5, -2).winding_number(0j) == -2
    assert (lp * lp).winding_number(0j) == 2
    assert lp.winding_number(5j) == 0
    assert lp.clearance([0j]) == pytest.approx(0.5)


def test_loop_errors():
    with pytest.raises(LoopError):
        LoopPath.circle(0.1, 0j, 0.5)
    with pytest.raises(LoopError):
        LoopPath((Segment(0j, 1 + 0j), Segment(2 + 0j, 0j)))


def test_canonical_loops_product_is_null_homotopic():
    pts = [0j, 1 + 0j, 0.3 + 0.8j, -0.5 - 0.4j]
    q = auto_base_point(pts)
    order, loops = canonical_loops(q, pts)
    assert sorted(order) == list(range(4))
    prod = loops[0]
    for lp in loops[1:]:
        prod = prod * lp
    for k, p in enumerate(pts):
        assert loops[order.index(k)].winding_number(p) == 1
        assert prod.winding_number(p) == 1
    # with the clockwise big circle appended the product is trivial around every point
    big = LoopPath.circle(q, 0.1 + 0.1j, 0.5 * (abs(q) + 1.2), -1)
    assert all((prod * big).winding_number(p) == 0 for p in pts)


def test_holonomy_needs_invariant_line():
    F = validate_normal_form(BP.y(), BP.x(), BP.x() * BP.x() + BP.y() * BP.y(), 2)
    with pytest.raises(LineNotInvariant):
        chart_field(F)


def test_multiple_root_rejected():
    P = BP({(0, 2): cq(1), (1, 0): cq(1)})
    Q = BP({(1, 1): cq(3), (2, 0): cq(-2), (0, 1): cq(1)})
    with pytest.raises(MultipleRoot):
        holonomy_generators(validate_normal_form(P, Q, BP(), 2))


def test_linear_generators_and_index_sum(linear):
    gens = holonomy_generators(linear)
    assert gens.at_infinity and len(gens.maps) == 2
    assert sum(gens.characteristic) == pytest.approx(1)
    for m, lam in zip(gens.maps, gens.characteristic):
        want = rotation_multiplier(lam)
        assert abs(m.multiplier - want) <= 1e-8 * abs(want)
        assert abs(m.linearized_multiplier() - want) <= 1e-10 * abs(want)


def test_variational_multiplier_matches_lift_derivative(x2):
    for m in x2.maps:
        lin = variational_multiplier(x2.field, m.loop)
        assert abs(m.multiplier - lin) <= 1e-7 * abs(lin)
        assert m.multiplier_estimate().error < 1e-6 * abs(lin)


def test_index_sum_and_product(x2):
    assert len(x2.maps) == 3
    assert sum(x2.characteristic) == pytest.approx(1)
    z = np.array([1e-3, 2e-3j, -1e-3 + 1e-3j])
    out = z
    for m in x2.maps:
        out = m(out)
    assert np.allclose(out, z, atol=1e-12)


def test_lift_is_vectorized_and_fixes_leaf(x2):
    m = x2.maps[0]
    z = np.array([0j, 1e-3 + 0j, 2e-3j])
    one_by_one = np.array([m(complex(v)) for v in z])
    assert np.allclose(m(z), one_by_one, atol=1e-15)
    assert m(0j) == 0


def test_lift_leaves_tube(x2):
    with pytest.raises(LeftDomain):
        lift_path(x2.field, x2.loops[0], np.array([0.5 + 0j]), tube=1e-3)
    k = int(np.argmax([abs(m.multiplier) for m in x2.maps]))
    assert abs(x2.maps[k].multiplier) > 1.2
    tube = 1e-4
    with pytest.raises(LeftDomain) as info:
        lift_path(x2.field, x2.loops[k], np.array([1e-6, 0.95 * tube]), tube=tube)
    assert list(info.value.indices) == [1]


def test_loop_must_be_based_at_disk(x2):
    with pytest.raises(LoopError):
        HolonomyMap(x2.field, LoopPath.circle(x2.disk.q + 1, x2.singular[0], 0.1), x2.disk)


def test_disk_check(x2):
    assert check_disk(x2.field, x2.disk, x2.singular) > 0
    with pytest.raises(LoopError):
        check_disk(x2.field, TransverseDisk(x2.singular[0], 1e-2), x2.singular, margin=1e-6)


def test_taylor_first_coefficient_is_multiplier(x2):
    m = x2.maps[1]
    coeffs = m.taylor(3)
    assert abs(coeffs[0][0] - m.multiplier) <= 1e-8 * abs(m.multiplier)


def test_surrogates_fit_the_lifts(x2):
    delta = common_radius(x2)
    G, errors = surrogate_group(x2, delta)
    assert max(errors) < 1e-9
    z = 0.5 * delta * np.exp(2j * math.pi * np.arange(5) / 5)
    for i, m in enumerate(x2.maps):
        assert np.allclose(G.generators[i](z), m(z), atol=1e-10)
        assert np.allclose(G.inverses[i](G.generators[i](z)), z, atol=1e-10)


def test_polynomial_surrogate_needs_nodes(x2):
    with pytest.raises(ValueError):
        polynomial_surrogate(x2.maps[0], 1e-3, degree=10, nodes=8)


@pytest.mark.parametrize("lam", [Fraction(1, 3), Fraction(-3, 2)])
def test_rational_index_real_multiplier(lam):
    mu = 1 - 1 / lam
    F = validate_normal_form(BP.x(), BP({(0, 1): cq(mu)}), BP(), 1)
    gens = holonomy_generators(F)
    k = int(np.argmin([abs(c - float(lam)) for c in gens.characteristic]))
    want = rotation_multiplier(complex(float(lam)))
    assert abs(gens.maps[k].multiplier - want) < 1e-8

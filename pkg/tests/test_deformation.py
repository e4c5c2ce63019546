import cmath

import numpy as np
import pytest

from conftest import SAMPLES
from holofol.deformation import (
    DeformationFamily,
    DegenerateFixedPoint,
    InitialPointRejected,
    cauchy_derivative,
    continuation_rhs,
    deform_generator,
    density_persistence_probe,
    fixed_point_newton,
    oracle_path,
    closed_form_rhs,
    track_fixed_point,
)
from holofol.germs import PolynomialGerm, PseudoGroup, Word, annulus_seeds, linear_germ, newton_fixed_points
from holofol.io import load_json, parse_family


@pytest.fixture(scope="module")
def pair():
    spec = parse_family(load_json(SAMPLES / "family.json"))
    return DeformationFamily(spec.group, spec.D, spec.eps, spec.deformed, C=spec.C)


def _nonzero_fixed_point(family, w):
    z, conv, _ = newton_fixed_points(family.base, w, annulus_seeds(0.05, 0.5), 1e-13)
    return complex(next(p for p, c in zip(z, conv) if c and abs(p) > 1e-3))


def _quadratic_family(a=0.5, D=1):
    return DeformationFamily(PseudoGroup([PolynomialGerm([a], "f")], 1.0), D, 0.2)


def test_deformed_generator_adds_monomial():
    g = PolynomialGerm([0.5, 1.0])
    h = deform_generator(g, 2, 0.1j)
    z = np.array([0.2 + 0.1j])
    assert np.allclose(h(z), g(z) + 0.1j * z**3)
    assert np.allclose(h.derivative(z), g.derivative(z) + 0.3j * z**2)
    assert deform_generator(g, 2, 0) is g


def test_family_constraints():
    with pytest.raises(ValueError):
        DeformationFamily(PseudoGroup([linear_germ(20.0)], 1.0), 1, 0.1)
    with pytest.raises(ValueError):
        DeformationFamily(PseudoGroup([linear_germ(0.5)], 1.0), 0, 0.1)
    fam = _quadratic_family()
    with pytest.raises(ValueError):
        fam.group(0.3)
    assert fam.constants() == {"D": 1, "eps": 0.2, "R": 1.0, "C": 0.1}


def test_closed_form_path_for_single_generator():
    # f_t(z) = a z + (1 + t) z^2 moves its nonzero fixed point along (1 - a) / (1 + t)
    a = 0.4 + 0.2j
    fam = DeformationFamily(PseudoGroup([PolynomialGerm([a, 1.0], "f")], 2.0), 1, 0.2)
    w = Word.of((0, 1))
    p0 = 1 - a
    T = track_fixed_point(fam, w, p0, 0.1, steps=10)
    exact = (1 - a) / (1 + T.ts)
    assert np.max(np.abs(T.points - exact)) < 1e-12
    assert T.breakdown is None


def test_rhs_against_difference_quotients(pair):
    w = Word.of((0, 1), (1, 1))
    p0 = _nonzero_fixed_point(pair, w)
    rhs = continuation_rhs(pair, w, 0, p0)
    errs = [abs((fixed_point_newton(pair, w, h, p0)[0] - p0) / h - rhs) for h in (1e-3, 1e-4)]
    assert errs[1] < errs[0] / 5
    assert abs(cauchy_derivative(pair, w, p0, 0.01) - rhs) < 1e-10


def test_inverse_letters_in_chain_rule(pair):
    w = Word.of((0, -1), (1, -1))
    p0 = _nonzero_fixed_point(pair, w)
    rhs = continuation_rhs(pair, w, 0, p0)
    assert abs(cauchy_derivative(pair, w, p0, 0.005) - rhs) < 1e-9


def test_closed_form_readings(pair):
    w = Word.of((1, 1), (0, 1))  # deformed letter acts first
    p0 = _nonzero_fixed_point(pair, w)
    rhs = continuation_rhs(pair, w, 0, p0)
    assert abs(closed_form_rhs(pair, w, 0, p0, "corrected") - rhs) < 1e-12
    assert abs(closed_form_rhs(pair, w, 0, p0, "literal") - rhs) > 1e-3
    with pytest.raises(ValueError):
        closed_form_rhs(pair, w, 0, p0, "other")


def test_initial_point_checks():
    fam = _quadratic_family()
    w = Word.of((0, 1))
    with pytest.raises(InitialPointRejected):
        track_fixed_point(fam, w, 0.3, 0.1)
    rot = DeformationFamily(PseudoGroup([linear_germ(cmath.exp(0.7j))], 1.0), 1, 0.2)
    with pytest.raises(InitialPointRejected):
        track_fixed_point(rot, w, 0j, 0.1)


def test_degenerate_fixed_point():
    fam = DeformationFamily(PseudoGroup([PolynomialGerm([1.0, 1.0])], 1.0), 1, 0.2)
    with pytest.raises(DegenerateFixedPoint):
        continuation_rhs(fam, Word.of((0, 1)), 0, 0j)


def test_tracking_stops_at_hyperbolicity_loss():
    # f_t(z) = 1.2 z + z^2 + t z^3: the fixed point near -0.2 has multiplier 0.8 at t = 0
    # drifting to about 0.85 at t = 0.8, which crosses the band | |m| - 1 | <= 0.17
    fam = DeformationFamily(PseudoGroup([PolynomialGerm([1.2, 1.0])], 1.0), 2, 0.9)
    T = track_fixed_point(fam, Word.of((0, 1)), -0.2 + 0j, 0.8, steps=40, tau=0.17)
    assert T.breakdown == "hyperbolicity-loss"
    assert abs(abs(T.multipliers[-1]) - 1) <= 0.17
    assert all(abs(abs(m) - 1) > 0.17 for m in T.multipliers[:-1])


def test_persistence_probe(pair):
    table = density_persistence_probe(pair, [0, 0.01, 0.02j], 0.5, 2000, 0.05, seed=3, hypotheses="demo")
    assert [r[0] for r in table.rows] == [0, 0.01, 0.02j]
    assert all(0 < r[2] <= 1 for r in table.rows)
    assert table.hypotheses == "demo"


def test_oracle_path_matches_tracking(pair):
    w = Word.of((0, 1), (1, 1))
    p0 = _nonzero_fixed_point(pair, w)
    T = track_fixed_point(pair, w, p0, 0.05j, steps=10)
    assert np.max(np.abs(oracle_path(pair, w, p0, T.ts) - T.points)) < 1e-10

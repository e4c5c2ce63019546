"""Holonomy of the line at infinity by numerical path lifting.

Work happens in the chart ``(u, v) = (1/x, y/x)`` where the line at
infinity is ``{u = 0}`` and the field is ``U d/du + V d/dv``.  A loop is a
path ``v(s)`` in ``{u = 0}`` avoiding the singular points; the leaf through
``(u0, v(0))`` is followed by integrating ``du/ds = U/V * v'(s)``.  The
transversal at the base point ``q`` is the fiber ``{v = q}``, so lifted
points return to it automatically.

Concatenation ``a * b`` runs ``a`` first; its holonomy is ``hol(b) o hol(a)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np
from scipy.integrate import quad_vec, solve_ivp

from .foliation import (
    ChartField,
    FoliationNormalForm,
    LineNotInvariant,
    infinity_chart,
    is_line_at_infinity_invariant,
    singularities_at_infinity,
)
from .germs import Germ, LeftDomain, MultiplierEstimate, PolynomialGerm, PseudoGroup, richardson_derivative


class NearSingularity(ArithmeticError):
    pass


class MultipleRoot(ValueError):
    pass


class LoopError(ValueError):
    pass


# -- loop geometry -------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, s):
        return self.start + (self.end - self.start) * s

    def velocity(self, s):
        return (self.end - self.start) * np.ones_like(np.asarray(s, dtype=float))

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def distance_to(self, p: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(p - self.start)
        s = min(1.0, max(0.0, ((p - self.start) * d.conjugate()).real / abs(d) ** 2))
        return abs(p - self.point(s))


@dataclass(frozen=True)
class Arc:
    """``center + radius * exp(i theta)`` for theta from ``theta0`` to ``theta1``."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(s, dtype=float)
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(s, dtype=float)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    def distance_to(self, p: complex) -> float:
        span = self.theta1 - self.theta0
        if abs(span) >= 2 * math.pi - 1e-12:
            return abs(abs(p - self.center) - self.radius)
        s = np.linspace(0.0, 1.0, 721)
        return float(np.min(np.abs(self.point(s) - p)))


Piece = Segment | Arc


@dataclass(frozen=True)
class LoopPath:
    """Closed piecewise path in ``{u = 0}``; ``encircles`` names the singular point of a canonical loop."""

    pieces: tuple[Piece, ...]
    encircles: int | None = None
    label: str = ""

    def __post_init__(self):
        for a, b in zip(self.pieces, self.pieces[1:]):
            if abs(a.end - b.start) > 1e-12 * max(1.0, abs(a.end)):
                raise LoopError("pieces do not join up")

    @property
    def base(self) -> complex:
        return self.pieces[0].start if self.pieces else complex("nan")

    def is_closed(self) -> bool:
        return not self.pieces or abs(self.pieces[-1].end - self.pieces[0].start) <= 1e-12 * max(1.0, abs(self.base))

    def reversed(self) -> "LoopPath":
        return LoopPath(tuple(p.reversed() for p in reversed(self.pieces)), self.encircles, self.label + "^-1")

    def __mul__(self, other: "LoopPath") -> "LoopPath":
        """``self`` first, then ``other``."""
        return LoopPath(self.pieces + other.pieces, None, f"{self.label}*{other.label}")

    def clearance(self, points: Sequence[complex]) -> float:
        if not self.pieces or not len(points):
            return math.inf
        return min(p.distance_to(c) for p in self.pieces for c in points)

    def winding_number(self, p: complex, samples: int = 4096) -> int:
        total = 0.0
        for piece in self.pieces:
            s = np.linspace(0.0, 1.0, samples)
            w = piece.point(s) - p
            total += float(np.sum(np.angle(w[1:] / w[:-1])))
        return int(round(total / (2 * math.pi)))

    @classmethod
    def constant(cls, q: complex) -> "LoopPath":
        return cls((), None, "const")

    @classmethod
    def circle(cls, q: complex, center: complex, radius: float, turns: int = 1, label: str = "") -> "LoopPath":
        """Radial connector from ``q`` to the circle, ``turns`` full turns (negative = clockwise), back."""
        d = q - center
        if abs(d) <= radius:
            raise LoopError("base point must lie outside the circle")
        theta = cmath.phase(d)
        foot = center + radius * cmath.exp(1j * theta)
        pieces: list[Piece] = [Segment(q, foot)]
        if turns:
            pieces.append(Arc(center, radius, theta, theta + 2 * math.pi * turns))
        pieces.append(Segment(foot, q))
        return cls(tuple(pieces), None, label)


# -- transverse disk and lifting -----------------------------------------------


@dataclass(frozen=True)
class TransverseDisk:
    """The disk ``{(u, q) : |u| < radius}`` in the infinity chart."""

    q: complex
    radius: float


def chart_field(F: FoliationNormalForm) -> ChartField:
    if not is_line_at_infinity_invariant(F):
        raise LineNotInvariant("the line at infinity is not invariant; no holonomy along it")
    return infinity_chart(F, "infinity")


def check_disk(field_: ChartField, disk: TransverseDisk, singular: Sequence[complex], margin: float = 0.0,
               samples: int = 64) -> float:
    """Verify the disk avoids singular points and the field crosses it; returns min |V| on samples.

    The disk is a u-line, so transversality means the dv-component ``V``
    does not vanish on it.
    """
    for p in singular:
        if abs(disk.q - p) <= margin:
            raise LoopError(f"base point {disk.q} within {margin} of singular point {p}")
    rho = disk.radius * np.sqrt(np.linspace(0, 1, 8))[:, None]
    ang = np.exp(2j * math.pi * np.arange(samples // 8) / (samples // 8))[None, :]
    u = (rho * ang).ravel()
    vmin = float(np.min(np.abs(field_.along(u, np.full(u.shape, disk.q)))))
    if vmin == 0.0:
        raise NearSingularity("the field is tangent to the transverse disk somewhere")
    return vmin


def _pack(u: np.ndarray) -> np.ndarray:
    return np.concatenate([u.real, u.imag])


def _unpack(y: np.ndarray) -> np.ndarray:
    n = y.size // 2
    return y[:n] + 1j * y[n:]


def lift_path(
    field_: ChartField,
    loop: LoopPath,
    z0,
    tol: float = 1e-10,
    tube: float = 1.0,
) -> np.ndarray:
    """Endpoints on the transversal of the lifts through each ``z0`` (vectorized).

    ``tol`` bounds the local relative error of the embedded Runge-Kutta pair
    (DOP853).  ``LeftDomain`` is raised if a lift leaves ``|u| <= tube``,
    ``NearSingularity`` if the step controller breaks down.
    """
    u = np.atleast_1d(np.asarray(z0, dtype=complex)).copy()
    if not loop.pieces or u.size == 0:
        return u if np.ndim(z0) else u[0]
    U, V = field_.transverse, field_.along
    # u = 0 is a leaf, so those points stay put; the others are integrated as
    # w = u / |u0| so one absolute tolerance fits every starting size
    moving = np.flatnonzero(u != 0)
    if moving.size == 0:
        return u if np.ndim(z0) else u[0]
    scale = np.abs(u[moving])
    if np.any(scale > tube):
        raise LeftDomain(f"starting point outside |u| <= {tube}", step=0, indices=moving[scale > tube])
    w = u[moving] / scale
    for k, piece in enumerate(loop.pieces):
        def rhs(s, y, piece=piece):
            z = _unpack(y) * scale
            v = piece.point(s)
            den = V(z, v)
            if np.any(den == 0):
                raise NearSingularity(f"path meets a singular point at s = {s}")
            return _pack(U(z, v) / den * piece.velocity(s) / scale)

        def leave(s, y):
            return tube - float(np.max(np.abs(_unpack(y)) * scale))

        leave.terminal = True
        sol = solve_ivp(rhs, (0.0, 1.0), _pack(w), method="DOP853", rtol=tol, atol=tol * 1e-6, events=leave)
        if sol.status == 1:
            out = np.abs(_unpack(sol.y_events[0][0])) * scale
            raise LeftDomain(
                f"lift left |u| <= {tube} on piece {k}",
                step=k,
                indices=moving[np.flatnonzero(out >= tube * (1 - 1e-9))],
            )
        if sol.status != 0:
            raise NearSingularity(f"integration failed on piece {k}: {sol.message}")
        w = _unpack(sol.y[:, -1])
    u[moving] = w * scale
    return u if np.ndim(z0) else u[0]


def variational_multiplier(field_: ChartField, loop: LoopPath) -> complex:
    """``exp`` of the integral of ``U_u(0, v) / V(0, v) dv`` along the loop (linearized lift at u = 0)."""
    Uu = field_.transverse.diff(0)
    V = field_.along
    total = 0j
    for piece in loop.pieces:
        def f(s, piece=piece):
            v = complex(piece.point(s))
            val = complex(Uu(0j, v)) / complex(V(0j, v)) * complex(piece.velocity(s))
            return np.array([val.real, val.imag])

        res, _ = quad_vec(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
        total += complex(res[0], res[1])
    return cmath.exp(total)


class HolonomyMap(Germ):
    """Holonomy germ of a loop on the transverse disk at its base point."""

    def __init__(self, field_: ChartField, loop: LoopPath, disk: TransverseDisk, tol: float = 1e-10,
                 tube: float = 1.0, label: str = "h"):
        if loop.pieces and abs(loop.base - disk.q) > 1e-12 * max(1.0, abs(disk.q)):
            raise LoopError("loop is not based at the disk's base point")
        if not loop.is_closed():
            raise LoopError("loop is not closed")
        self.field, self.loop, self.disk = field_, loop, disk
        self.tol, self.tube, self.label = tol, tube, label
        self._mult: MultiplierEstimate | None = None

    def __call__(self, z):
        return lift_path(self.field, self.loop, z, self.tol * 1e-2, self.tube)

    def derivative(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        h = 1e-4 * self.disk.radius
        vals = self(np.concatenate([z + h, z - h, z + 1j * h, z - 1j * h]))
        a, b, c, d = np.split(vals, 4)
        return 0.5 * ((a - b) / (2 * h) + (c - d) / (2j * h))

    def inverse(self) -> "HolonomyMap":
        return HolonomyMap(self.field, self.loop.reversed(), self.disk, self.tol, self.tube, self.label + "^-1")

    def multiplier_estimate(self) -> MultiplierEstimate:
        if self._mult is None:
            # shrink the step for strongly expanding loops so the lift stays in the tube
            growth = max(1.0, abs(self.linearized_multiplier()))
            self._mult = richardson_derivative(self, 0j, 1e-2 * self.disk.radius / growth)
        return self._mult

    @property
    def multiplier(self) -> complex:
        return self.multiplier_estimate().value

    def linearized_multiplier(self) -> complex:
        return variational_multiplier(self.field, self.loop)

    def taylor(self, order: int = 3, points: int = 16) -> list[tuple[complex, float]]:
        """Coefficients of ``z^1..z^order`` by discrete Cauchy integrals on two radii, with error bars."""
        out = []
        est = []
        for rho in (0.1 * self.disk.radius, 0.05 * self.disk.radius):
            w = np.exp(2j * math.pi * np.arange(points) / points)
            vals = self(rho * w)
            est.append([np.mean(vals * w ** (-k)) / rho**k for k in range(1, order + 1)])
        for a, b in zip(*est):
            out.append((complex(b), float(abs(a - b))))
        return out


# -- canonical loops -----------------------------------------------------------


@dataclass
class HolonomyGenerators:
    """Canonical loops and their holonomy maps.

    Generators are ordered by the direction of their connector as seen from
    ``q``, counter-clockwise, starting after the widest angular gap.  With
    that order the product ``loop_1 * ... * loop_m`` is homotopic to a
    trivial loop, so ``hol_m o ... o hol_1`` is the identity.
    """

    field: ChartField
    disk: TransverseDisk
    singular: list[complex]  # finite singular points, in generator order
    at_infinity: bool  # [0:1:0] is singular; its generator is last
    loops: list[LoopPath]
    maps: list[HolonomyMap]
    characteristic: list[complex]
    notes: list[str] = field(default_factory=list)

    def pseudo_group(self, radius: float | None = None) -> PseudoGroup:
        r = self.disk.radius if radius is None else radius
        return PseudoGroup(list(self.maps), r, "Hol", [m.inverse() for m in self.maps])

    def product_loop(self) -> LoopPath:
        out = self.loops[0]
        for lp in self.loops[1:]:
            out = out * lp
        return out


def auto_base_point(points: Sequence[complex], candidates: int = 72) -> complex:
    """Base point outside the singular set chosen to maximize connector clearance."""
    pts = np.asarray(points, dtype=complex)
    c = complex(np.mean(pts)) if pts.size else 0j
    spread = float(np.max(np.abs(pts - c))) if pts.size else 0.0
    R = 2.0 * spread + 1.0
    best, best_score = None, -1.0
    for k in range(candidates):
        q = c + R * cmath.exp(1j * (2 * math.pi * k / candidates + 0.1))
        score = _connector_clearance(q, pts)
        if score > best_score + 1e-12:
            best, best_score = q, score
    return complex(best)


def _connector_clearance(q: complex, pts: np.ndarray) -> float:
    if pts.size < 2:
        return math.inf
    worst = math.inf
    for i, p in enumerate(pts):
        seg = Segment(q, complex(p))
        for j, o in enumerate(pts):
            if i != j:
                worst = min(worst, seg.distance_to(complex(o)))
    return worst


def canonical_loops(q: complex, points: Sequence[complex], clearance_factor: float = 0.25) -> tuple[list[int], list[LoopPath]]:
    """Order and build the simple loops around each finite singular point.

    Circle radius: half the distance to the nearest other singular point,
    capped at half the distance to ``q``.  Returns (order, loops).
    """
    pts = [complex(p) for p in points]
    if not pts:
        return [], []
    radii = []
    for i, p in enumerate(pts):
        others = [abs(p - o) for j, o in enumerate(pts) if j != i]
        rad = 0.5 * min(others) if others else 0.5 * abs(q - p)
        radii.append(min(rad, 0.5 * abs(q - p)))
    angles = [cmath.phase(p - q) % (2 * math.pi) for p in pts]
    order = sorted(range(len(pts)), key=lambda i: angles[i])
    if len(order) > 1:
        sa = [angles[i] for i in order]
        gaps = [(sa[(k + 1) % len(sa)] - sa[k]) % (2 * math.pi) for k in range(len(sa))]
        start = (int(np.argmax(gaps)) + 1) % len(sa)
        order = order[start:] + order[:start]
    loops = []
    for i in order:
        lp = LoopPath.circle(q, pts[i], radii[i], 1, f"alpha_{i + 1}")
        lp = LoopPath(lp.pieces, i, lp.label)
        others = [o for j, o in enumerate(pts) if j != i]
        if others and lp.clearance(others) < clearance_factor * radii[i]:
            raise LoopError(f"connector to singular point {i} passes too close to another singular point")
        loops.append(lp)
    return order, loops


def holonomy_generators(
    F: FoliationNormalForm,
    disk: TransverseDisk | None = None,
    radius: float = 1e-2,
    tol: float = 1e-10,
    tube: float = 1.0,
) -> HolonomyGenerators:
    """One holonomy map per singular point of the foliation on the line at infinity.

    Finite points of the ``v``-line get canonical circles; if ``[0:1:0]``
    is singular its loop is the big circle around all finite points run
    clockwise, which closes the product relation.
    """
    field_ = chart_field(F)
    sings = singularities_at_infinity(F)
    if any(s.multiple for s in sings):
        raise MultipleRoot("a singular point on the line at infinity is multiple; canonical loops need simple roots")
    finite = [s for s in sings if s.chart == "infinity"]
    inf_pt = [s for s in sings if s.chart == "infinity_y"]
    pts = [complex(s.location[1]) for s in finite]
    q = auto_base_point(pts) if disk is None else disk.q
    disk = TransverseDisk(q, radius) if disk is None else disk
    check_disk(field_, disk, pts)
    order, loops = canonical_loops(q, pts)
    lams = [finite[i].lam for i in order]
    singular = [pts[i] for i in order]
    notes = []
    if inf_pt:
        c = complex(np.mean(pts)) if pts else 0j
        big = max([abs(p - c) for p in pts], default=0.0)
        R = 0.5 * (big + abs(q - c)) if pts else 0.5 * abs(q - c) or 1.0
        if R <= big or abs(q - c) <= R:
            raise LoopError("no room for the loop around [0:1:0]")
        lp = LoopPath.circle(q, c, R, -1, "alpha_inf")
        loops.append(lp)
        lams.append(inf_pt[0].lam)
        notes.append("last generator encircles [0:1:0] (clockwise circle in the v-line)")
    maps = [HolonomyMap(field_, lp, disk, tol, tube, lp.label) for lp in loops]
    return HolonomyGenerators(field_, disk, singular, bool(inf_pt), loops, maps, lams, notes)


# -- polynomial surrogates -------------------------------------------------------


@dataclass(frozen=True)
class Surrogate:
    germ: PolynomialGerm
    radius: float
    fit_error: float  # max |surrogate - lift| on an interior check circle


def polynomial_surrogate(m: Germ, radius: float, degree: int = 12, nodes: int = 48) -> Surrogate:
    """Truncated Taylor series of ``m`` from a discrete Cauchy integral on ``|z| = radius``.

    The error is measured against ``m`` itself on a rotated circle of
    radius ``0.7 * radius``.
    """
    if nodes <= degree:
        raise ValueError("need more nodes than the degree")
    w = np.exp(2j * math.pi * np.arange(nodes) / nodes)
    vals = np.asarray(m(radius * w), dtype=complex)
    coeffs = [complex(np.mean(vals * w ** (-k)) / radius**k) for k in range(1, degree + 1)]
    germ = PolynomialGerm(coeffs, getattr(m, "label", "h"))
    check = 0.7 * radius * w * np.exp(1j * math.pi / nodes)
    err = float(np.max(np.abs(germ(check) - np.asarray(m(check), dtype=complex))))
    return Surrogate(germ, radius, err)


def common_radius(gens: HolonomyGenerators, tube: float = 1.0) -> float:
    """Radius on which every generator and inverse ends inside a tenth of the tube.

    Lifts can overshoot their endpoint along the way, hence the margin.
    """
    growth = 1.0
    for m in gens.maps:
        a = abs(m.linearized_multiplier())
        growth = max(growth, a, 1.0 / a)
    return min(gens.disk.radius, 0.1 * tube / growth)


def surrogate_group(gens: HolonomyGenerators, radius: float, degree: int = 12) -> tuple[PseudoGroup, list[float]]:
    """Pseudo-group of polynomial surrogates for the generators and their inverses, with fit errors.

    Fits use the circle of radius ``1.5 * radius`` so the domain sits
    inside the fitting disk.
    """
    fwd = [polynomial_surrogate(m, 1.5 * radius, degree) for m in gens.maps]
    inv = [polynomial_surrogate(m.inverse(), 1.5 * radius, degree) for m in gens.maps]
    for s, m in zip(inv, gens.maps):
        s.germ.label = m.label + "^-1"
    G = PseudoGroup([s.germ for s in fwd], radius, "Hol~", [s.germ for s in inv])
    return G, [s.fit_error for s in fwd + inv]

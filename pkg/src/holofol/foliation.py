"""Polynomial foliations of CP(2) in affine normal form.

A degree-``n`` foliation is the kernel of the 1-form

    (P + x g) dy - (Q + y g) dx,

equivalently the orbits of the vector field ``A d/dx + B d/dy`` with
``A = P + x g`` and ``B = Q + y g``.  The line at infinity is studied in
the chart ``u = 1/x, v = y/x`` (and ``w = 1/y, s = x/y`` for the single
point ``[0:1:0]`` that chart misses).  Chart coordinates are always
ordered (transverse, along), so ``L_inf = {first coordinate = 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp
from sympy.polys.domains import QQ_I

from .exact import ONE, as_cq, cq, to_complex
from .polynomial import (
    X,
    Y,
    BivariatePolynomial,
    trim,
    upoly_degree,
)

# -- errors -------------------------------------------------------------------


class FoliationError(ValueError):
    """Base class; ``condition`` names the violated normal-form condition (1)-(4) when relevant."""

    condition: int | None = None

    def __init__(self, message: str):
        super().__init__(message)


class CommonFactor(FoliationError):
    condition = 1


class NonHomogeneousG(FoliationError):
    condition = 2


class DegreeBoundViolated(FoliationError):
    condition = 3


class DegreeMismatch(FoliationError):
    condition = 4


class InvariantLine(FoliationError):
    pass


class LineNotInvariant(FoliationError):
    pass


# -- types --------------------------------------------------------------------


@dataclass(frozen=True)
class FoliationNormalForm:
    P: BivariatePolynomial
    Q: BivariatePolynomial
    g: BivariatePolynomial
    n: int

    @property
    def A(self) -> BivariatePolynomial:
        """x-component of the tangent vector field, ``P + x g``."""
        return self.P + BivariatePolynomial.x() * self.g

    @property
    def B(self) -> BivariatePolynomial:
        """y-component of the tangent vector field, ``Q + y g``."""
        return self.Q + BivariatePolynomial.y() * self.g


@dataclass(frozen=True)
class ProjectiveLineChart:
    """Chart of CP(2).  ``infinity``: (u, v) = (1/x, y/x); ``infinity_y``: (w, s) = (1/y, x/y)."""

    chart: str = "affine"

    def __post_init__(self):
        if self.chart not in ("affine", "infinity", "infinity_y"):
            raise ValueError(f"unknown chart {self.chart!r}")

    def to_affine(self, a, b):
        if self.chart == "affine":
            return a, b
        if self.chart == "infinity":
            return 1 / a, b / a
        return b / a, 1 / a

    def from_affine(self, x, y):
        if self.chart == "affine":
            return x, y
        if self.chart == "infinity":
            return 1 / x, y / x
        return 1 / y, x / y


@dataclass(frozen=True)
class ChartField:
    """Polynomial vector field ``transverse * d/da + along * d/db`` in a chart with coordinates (a, b)."""

    chart: ProjectiveLineChart
    transverse: BivariatePolynomial
    along: BivariatePolynomial

    def __call__(self, a, b):
        return self.transverse(a, b), self.along(a, b)

    def jacobian_polys(self):
        return (
            (self.transverse.diff(0), self.transverse.diff(1)),
            (self.along.diff(0), self.along.diff(1)),
        )


@dataclass(frozen=True)
class Line:
    """Affine line ``point + s * direction``."""

    point: tuple
    direction: tuple


LINE_AT_INFINITY = "infinity"


@dataclass(frozen=True)
class Singularity:
    chart: str
    location: tuple[complex, complex]
    eigenvalues: tuple[complex, complex]
    lam: complex
    lam_inv: complex
    residual: float
    multiplicity: int = 1

    @property
    def multiple(self) -> bool:
        return self.multiplicity > 1


@dataclass(frozen=True)
class SingularityClass:
    non_degenerate: bool
    hyperbolic: bool | None
    reduced: bool | None
    saddle_type: bool | None
    note: str = ""


@dataclass
class Region:
    """Box in C^2: real and imaginary ranges for each coordinate."""

    x_re: tuple[float, float] = (-2.0, 2.0)
    x_im: tuple[float, float] = (-2.0, 2.0)
    y_re: tuple[float, float] = (-2.0, 2.0)
    y_im: tuple[float, float] = (-2.0, 2.0)

    @classmethod
    def box(cls, radius: float, center: tuple[complex, complex] = (0j, 0j)) -> "Region":
        cx, cy = complex(center[0]), complex(center[1])
        return cls(
            (cx.real - radius, cx.real + radius),
            (cx.imag - radius, cx.imag + radius),
            (cy.real - radius, cy.real + radius),
            (cy.imag - radius, cy.imag + radius),
        )

    def contains(self, x: complex, y: complex, slack: float = 1e-9) -> bool:
        def inside(v, rng):
            return rng[0] - slack <= v <= rng[1] + slack

        return (
            inside(x.real, self.x_re)
            and inside(x.imag, self.x_im)
            and inside(y.real, self.y_re)
            and inside(y.imag, self.y_im)
        )


# -- validation and degree ----------------------------------------------------


def _resultant_vanishes(a: BivariatePolynomial, b: BivariatePolynomial, var) -> bool:
    res = sp.resultant(a.to_poly(), b.to_poly(), var)
    if isinstance(res, sp.Poly):
        return res.is_zero
    return sp.simplify(res) == 0


def relatively_prime(a: BivariatePolynomial, b: BivariatePolynomial) -> bool:
    """Exact coprimality over Q(i) by resultants in each variable.

    A common factor of positive degree in ``y`` kills ``Res_y``; one that
    depends on ``x`` alone kills ``Res_x``.
    """
    if a.is_zero() or b.is_zero():
        other = b if a.is_zero() else a
        return other.degree == 0
    if a.degree == 0 or b.degree == 0:
        return True
    for var, idx in ((Y, 1), (X, 0)):
        if a.degree_in(idx) > 0 and b.degree_in(idx) > 0 and _resultant_vanishes(a, b, var):
            return False
    return True


def validate_normal_form(
    P: BivariatePolynomial, Q: BivariatePolynomial, g: BivariatePolynomial, n: int
) -> FoliationNormalForm:
    """Check the four normal-form conditions and return the validated form.

    Raises the subclass of :class:`FoliationError` naming the first failed
    condition, checked in the order (2), (3), (4), (1).
    """
    if n < 0:
        raise DegreeBoundViolated(f"declared degree must be non-negative, got {n}")
    if not g.is_zero() and not g.is_homogeneous(n):
        raise NonHomogeneousG(f"condition (2): g must be homogeneous of degree {n} or zero")
    top = max(P.degree, Q.degree)
    if top > n:
        raise DegreeBoundViolated(f"condition (3): max(deg P, deg Q) = {top} exceeds n = {n}")
    if g.is_zero() and top != n:
        raise DegreeMismatch(
            f"condition (4): g = 0 requires max(deg P, deg Q) = n = {n}, got {top}"
        )
    F = FoliationNormalForm(P, Q, g, n)
    if not relatively_prime(F.A, F.B):
        raise CommonFactor("condition (1): P + x g and Q + y g share a common factor")
    return F


def degree(F: FoliationNormalForm) -> int:
    return F.n


def tangency_polynomial(F: FoliationNormalForm, L) -> list:
    """Exact univariate polynomial (ascending coefficients) whose roots are the tangencies of F with L.

    ``L`` is a :class:`Line` (parameter ``s`` along ``point + s*direction``)
    or ``LINE_AT_INFINITY`` (parameter ``v`` of the infinity chart).
    """
    if isinstance(L, str):
        if L != LINE_AT_INFINITY:
            raise ValueError(f"unknown line {L!r}")
        field_ = infinity_chart(F)
        coeffs = field_.transverse.restrict_x(0)
    else:
        dx, dy = (as_cq(c) for c in L.direction)
        if not dx and not dy:
            raise ValueError("line direction must be non-zero")
        a = F.A.along_line(L.point, L.direction)
        b = F.B.along_line(L.point, L.direction)
        n = max(len(a), len(b))
        a = a + [cq()] * (n - len(a))
        b = b + [cq()] * (n - len(b))
        coeffs = trim([ai * dy - bi * dx for ai, bi in zip(a, b)])
    if not coeffs:
        raise InvariantLine("the line is invariant by the foliation")
    return coeffs


def random_line(rng: np.random.Generator, span: int = 5) -> Line:
    """Line with small random Gaussian-integer point and direction over 1..span denominators."""

    def r():
        num = rng.integers(-span, span + 1, size=2)
        den = rng.integers(1, span + 1, size=2)
        return cq(Fraction(int(num[0]), int(den[0])), Fraction(int(num[1]), int(den[1])))

    direction = (r(), r())
    while not direction[0] and not direction[1]:
        direction = (r(), r())
    return Line((r(), r()), direction)


def tangency_degrees(F: FoliationNormalForm, count: int = 5, seed: int = 0) -> list[int]:
    """Degrees of the tangency polynomial on ``count`` random non-invariant lines."""
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 50 * count:
            raise RuntimeError("could not find enough non-invariant lines")
        try:
            out.append(int(upoly_degree(tangency_polynomial(F, random_line(rng)))))
        except InvariantLine:
            continue
    return out


# -- charts at infinity -------------------------------------------------------


def _homogenize(p: BivariatePolynomial, N: int, chart: str) -> BivariatePolynomial:
    """``t^N p(...)`` rewritten in chart coordinates (transverse t, along a)."""
    out = {}
    for (i, j), c in p.items():
        if chart == "infinity":
            out[(N - i - j, j)] = c
        else:
            out[(N - i - j, i)] = c
    return BivariatePolynomial(out)


def infinity_chart(F: FoliationNormalForm, chart: str = "infinity") -> ChartField:
    """Vector field of F in a chart at infinity with the common monomial factor removed."""
    N = F.n + 1
    if chart == "infinity":
        a = _homogenize(F.A, N, chart)
        b = _homogenize(F.B, N, chart)
    elif chart == "infinity_y":
        # roles of x and y swap in the (w, s) = (1/y, x/y) chart
        a = _homogenize(F.B, N, chart)
        b = _homogenize(F.A, N, chart)
    else:
        raise ValueError(f"not a chart at infinity: {chart!r}")
    t = BivariatePolynomial({(1, 0): ONE})
    s = BivariatePolynomial({(0, 1): ONE})
    transverse = -(t * a)
    along = b - s * a
    if transverse.is_zero() and along.is_zero():
        raise FoliationError("chart field vanishes identically")
    nz = [p for p in (transverse, along) if not p.is_zero()]
    e0 = min(p.min_exponents()[0] for p in nz)
    e1 = min(p.min_exponents()[1] for p in nz)
    return ChartField(
        ProjectiveLineChart(chart),
        transverse.monomial_divide(e0, e1),
        along.monomial_divide(e0, e1),
    )


def is_line_at_infinity_invariant(F: FoliationNormalForm) -> bool:
    """True iff ``u`` divides the transverse component of the infinity-chart field."""
    return all(i >= 1 for (i, _), _c in infinity_chart(F).transverse.items())


# -- singularities ------------------------------------------------------------


def _ordered_eigs(e: np.ndarray) -> tuple[complex, complex]:
    a, b = complex(e[0]), complex(e[1])
    key = lambda z: (round(abs(z), 12), round(z.real, 12), round(z.imag, 12))  # noqa: E731
    return (a, b) if key(a) <= key(b) else (b, a)


def _ratio(num: complex, den: complex) -> complex:
    if den == 0:
        return complex(math.nan, math.nan)
    return num / den


def _affine_convention(J: np.ndarray) -> tuple[tuple[complex, complex], complex, complex]:
    e1, e2 = _ordered_eigs(np.linalg.eigvals(J))
    return (e1, e2), _ratio(e2, e1), _ratio(e1, e2)


def _jacobian(fa, fb, x, y) -> np.ndarray:
    (ax, ay), (bx, by) = (fa.diff(0), fa.diff(1)), (fb.diff(0), fb.diff(1))
    return np.array(
        [[complex(ax(x, y)), complex(ay(x, y))], [complex(bx(x, y)), complex(by(x, y))]]
    )


def _seeds(region: Region, grid: int) -> tuple[np.ndarray, np.ndarray]:
    # real parts on a grid, imaginary parts from an R2 low-discrepancy sequence
    xr = np.linspace(*region.x_re, grid)
    yr = np.linspace(*region.y_re, grid)
    XR, YR = np.meshgrid(xr, yr, indexing="ij")
    k = np.arange(grid * grid, dtype=float)
    a1, a2 = 0.7548776662466927, 0.5698402909980532
    fx = (0.5 + a1 * k) % 1.0
    fy = (0.5 + a2 * k) % 1.0
    xi = region.x_im[0] + fx * (region.x_im[1] - region.x_im[0])
    yi = region.y_im[0] + fy * (region.y_im[1] - region.y_im[0])
    return XR.ravel() + 1j * xi, YR.ravel() + 1j * yi


@dataclass
class SingularityScan:
    singularities: list[Singularity]
    seeds: int
    failures: int
    notes: list[str] = field(default_factory=list)


def scan_affine_singularities(
    F: FoliationNormalForm,
    region: Region | None = None,
    grid: int = 32,
    tol: float = 1e-12,
    dedup_tol: float = 1e-7,
    max_iter: int = 80,
) -> SingularityScan:
    """Multistart Newton for the zeros of (A, B) in ``region``; per-seed failures are counted."""
    region = region or Region()
    A, B = F.A, F.B
    Ax, Ay, Bx, By = A.diff(0), A.diff(1), B.diff(0), B.diff(1)
    x, y = _seeds(region, grid)
    alive = np.ones(x.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            fa, fb = A(x, y), B(x, y)
            j11, j12, j21, j22 = Ax(x, y), Ay(x, y), Bx(x, y), By(x, y)
            det = j11 * j22 - j12 * j21
            dx = (j22 * fa - j12 * fb) / det
            dy = (-j21 * fa + j11 * fb) / det
            step_ok = np.isfinite(dx) & np.isfinite(dy)
            alive &= step_ok
            x = np.where(alive, x - dx, x)
            y = np.where(alive, y - dy, y)
            alive &= (np.abs(x) < 1e8) & (np.abs(y) < 1e8)
            if np.all(np.abs(dx[alive]) + np.abs(dy[alive]) < tol):
                break
        res = np.maximum(np.abs(A(x, y)), np.abs(B(x, y)))
    scale = 1.0 + max(abs(to_complex(c)) for p in (A, B) for _, c in p.items())
    converged = alive & np.isfinite(res) & (res <= 1e-10 * scale)
    failures = int((~converged).sum())
    found: list[tuple[complex, complex, float]] = []
    for xi, yi, ri in zip(x[converged], y[converged], res[converged]):
        xi, yi = complex(xi), complex(yi)
        if not region.contains(xi, yi):
            continue
        if any(abs(xi - fx) + abs(yi - fy) < dedup_tol for fx, fy, _ in found):
            continue
        found.append((xi, yi, float(ri)))
    found.sort(key=lambda t: tuple(round(v, 9) for v in (t[0].real, t[0].imag, t[1].real, t[1].imag)))
    sings = []
    for xi, yi, ri in found:
        J = _jacobian(A, B, xi, yi)
        eigs, lam, lam_inv = _affine_convention(J)
        sings.append(Singularity("affine", (xi, yi), eigs, lam, lam_inv, ri))
    return SingularityScan(sings, int(x.size), failures)


def affine_singularities(
    F: FoliationNormalForm, region: Region | None = None, grid: int = 32, tol: float = 1e-12
) -> list[Singularity]:
    return scan_affine_singularities(F, region, grid, tol).singularities


def _polish_root(coeffs: list, z: complex, iters: int = 20) -> complex:
    c = np.array([to_complex(v) for v in reversed(coeffs)])
    d = np.polyder(c)
    for _ in range(iters):
        fz = np.polyval(c, z)
        dz = np.polyval(d, z)
        if dz == 0:
            break
        step = fz / dz
        z = z - step
        if abs(step) < 1e-16 * max(1.0, abs(z)):
            break
    return complex(z)


def _distinct_roots(coeffs: list) -> list[tuple[complex, int]]:
    """Numerical roots of the exact polynomial with exact multiplicities (square-free factorization)."""
    s = sp.Symbol("s")
    p = sp.Poly(list(reversed([QQ_I.to_sympy(v) for v in coeffs])), s, domain=QQ_I)
    out = []
    for factor, mult in sp.sqf_list(p)[1]:
        fc = [QQ_I.from_sympy(c) for c in reversed(factor.all_coeffs())]
        for r in np.roots([to_complex(v) for v in reversed(fc)]):
            out.append((_polish_root(fc, complex(r)), int(mult)))
    out.sort(key=lambda t: (round(t[0].real, 9), round(t[0].imag, 9)))
    return out


def _infinity_singularity(field_: ChartField, along_value: complex, mult: int, invariant: bool):
    a0 = 0j
    J = _jacobian(field_.transverse, field_.along, a0, along_value)
    res = float(
        max(abs(complex(field_.transverse(a0, along_value))), abs(complex(field_.along(a0, along_value))))
    )
    if invariant:
        # triangular at points of the invariant line: transverse / tangential
        e_tr, e_tan = J[0, 0], J[1, 1]
        eigs = (complex(e_tan), complex(e_tr))
        lam, lam_inv = _ratio(e_tr, e_tan), _ratio(e_tan, e_tr)
    else:
        eigs, lam, lam_inv = _affine_convention(J)
    return Singularity(field_.chart.chart, (a0, along_value), eigs, lam, lam_inv, res, mult)


def _origin_order(p: BivariatePolynomial) -> int:
    """Order of vanishing at s = 0 of p(0, s); -1 if p(0, s) is identically zero."""
    c = p.restrict_x(0)
    for k, v in enumerate(c):
        if v:
            return k
    return -1


def singularities_at_infinity(F: FoliationNormalForm, require_invariant: bool = True) -> list[Singularity]:
    """Singular points of F on L_inf, each with its multiplicity (``multiple`` flags repeated roots)."""
    invariant = is_line_at_infinity_invariant(F)
    if require_invariant and not invariant:
        raise LineNotInvariant("L_inf is not invariant by the foliation")
    f1 = infinity_chart(F, "infinity")
    if invariant:
        along0 = f1.along.restrict_x(0)
        roots = _distinct_roots(along0) if along0 else []
    else:
        roots = _common_roots(f1.transverse.restrict_x(0), f1.along.restrict_x(0))
    out = [_infinity_singularity(f1, r, m, invariant) for r, m in roots]
    f2 = infinity_chart(F, "infinity_y")
    t0 = _origin_order(f2.transverse)
    a0 = _origin_order(f2.along)
    if (t0 != 0) and (a0 != 0):
        if invariant:
            mult = a0 if a0 > 0 else F.n + 1
        else:
            mult = max(1, min(k for k in (t0, a0) if k > 0)) if max(t0, a0) > 0 else 1
        out.append(_infinity_singularity(f2, 0j, mult, invariant))
    return out


def _common_roots(a: list, b: list) -> list[tuple[complex, int]]:
    s = sp.Symbol("s")

    def poly(c):
        return sp.Poly(list(reversed([QQ_I.to_sympy(v) for v in c])) or [0], s, domain=QQ_I)

    pa, pb = poly(a), poly(b)
    g = sp.gcd(pa, pb)
    if g.degree() <= 0:
        return []
    return _distinct_roots([QQ_I.from_sympy(c) for c in reversed(g.all_coeffs())])


# -- classification -----------------------------------------------------------


def positive_rational_match(x: float, max_den: int = 10**6, tol: float = 1e-10) -> Fraction | None:
    """First continued-fraction convergent p/q > 0 of ``x`` with ``|x - p/q| <= tol`` and q <= max_den."""
    if not math.isfinite(x) or x <= 0:
        return None
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    r = x
    for _ in range(64):
        a = math.floor(r)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_den:
            return None
        if abs(x - h1 / k1) <= tol * max(1.0, abs(x)):
            return Fraction(h1, k1)
        frac = r - a
        if frac <= 0:
            return Fraction(h1, k1)
        r = 1.0 / frac
    return None


def classify_singularity(
    s: Singularity,
    tol: float = 1e-10,
    max_den: int = 10**6,
    rational_tol: float = 1e-10,
) -> SingularityClass:
    """Flags for a singularity from its characteristic number.

    hyperbolic: lambda not real; saddle_type: lambda in (C - R) or R_-;
    reduced: lambda not a positive rational (within ``rational_tol``,
    denominators up to ``max_den``).
    """
    mags = [abs(e) for e in s.eigenvalues]
    if min(mags) <= tol * max(1.0, max(mags)) or not np.isfinite(s.lam):
        return SingularityClass(False, None, None, None, "degenerate jacobian: flags undefined")
    lam = s.lam
    real = abs(lam.imag) <= tol * max(1.0, abs(lam))
    hyperbolic = not real
    saddle = hyperbolic or lam.real < 0
    note = ""
    if real and lam.real > 0:
        q = positive_rational_match(lam.real, max_den, rational_tol)
        reduced = q is None
        if q is not None:
            conf = "high" if q.denominator <= 1000 else "low"
            note = f"lambda matches {q} within {rational_tol:g} (confidence {conf})"
    else:
        reduced = True
    return SingularityClass(True, hyperbolic, reduced, saddle, note)


@dataclass
class MembershipReport:
    n: int
    S: bool
    T: bool
    X: bool
    H: bool
    affine: list[Singularity]
    infinity: list[Singularity]
    classes: dict[int, SingularityClass]
    notes: list[str]


def class_membership(
    F: FoliationNormalForm, region: Region | None = None, grid: int = 32
) -> MembershipReport:
    """Membership in S(n), T(n), X(n), H(n); affine singularities only within ``region``."""
    scan = scan_affine_singularities(F, region, grid)
    inv = is_line_at_infinity_invariant(F)
    at_inf = singularities_at_infinity(F, require_invariant=False)
    sings = scan.singularities + at_inf
    classes = {k: classify_singularity(s) for k, s in enumerate(sings)}
    nondeg = all(c.non_degenerate for c in classes.values())
    T = nondeg and all(c.reduced for c in classes.values())
    H = T and inv and all(classes[len(scan.singularities) + k].hyperbolic for k in range(len(at_inf)))
    notes = ["affine singularities relative to scanned region"]
    if F.n < 2:
        notes.append(f"degree {F.n} is below the n >= 2 regime of the class definitions")
    notes.extend(c.note for c in classes.values() if c.note)
    return MembershipReport(F.n, nondeg, T, inv, H, scan.singularities, at_inf, classes, notes)

"""One-parameter deformations ``g_1 -> g_1 + t z^(D+1)`` and fixed-point continuation.

A hyperbolic fixed point ``p`` of a word ``f_t`` moves analytically with
``t``.  Differentiating ``f_t(p(t)) = p(t)`` gives

    dp/dt = (d f_t / dt)(p) / (1 - f_t'(p)),

where ``d f_t / dt`` is accumulated letter by letter through the chain
rule.  Tracking uses that right-hand side as a Runge-Kutta predictor
followed by a Newton corrector at every step.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np

from .germs import (
    DeformedGerm,
    Germ,
    LeftDomain,
    NewtonInverse,
    PseudoGroup,
    Word,
    evaluate_word,
    orbit_density_probe,
)


class DegenerateFixedPoint(ArithmeticError):
    pass


class InitialPointRejected(ValueError):
    pass


@dataclass
class DeformationFamily:
    """``g_{1,t} = g_1 + t z^(D+1)`` for ``|t| < eps``; other generators fixed.

    ``R`` is the common domain radius and ``C`` bounds the linear
    coefficients: ``C <= |g_j'(0)| <= 1/C``.
    """

    base: PseudoGroup
    D: int
    eps: float
    deformed: int = 0
    R: float | None = None
    C: float = 0.1

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("D must be >= 1")
        if not 0 <= self.deformed < len(self.base.generators):
            raise ValueError("deformed generator index out of range")
        if self.R is None:
            self.R = self.base.radius
        if not 0 < self.C < 1:
            raise ValueError("C must lie in (0, 1)")
        for g in self.base.generators:
            a = abs(g.multiplier)
            if not self.C <= a <= 1 / self.C:
                raise ValueError(f"linear coefficient modulus {a} outside [{self.C}, {1 / self.C}]")
        self._cache: dict[complex, PseudoGroup] = {}

    def generator(self, t: complex) -> Germ:
        return deform_generator(self.base.generators[self.deformed], self.D, t)

    def group(self, t: complex) -> PseudoGroup:
        t = complex(t)
        if abs(t) >= self.eps:
            raise ValueError(f"|t| = {abs(t)} is outside the parameter disk of radius {self.eps}")
        if t == 0:
            return self.base
        if t not in self._cache:
            gens = list(self.base.generators)
            invs = list(self.base.inverses)
            gens[self.deformed] = self.generator(t)
            invs[self.deformed] = NewtonInverse(gens[self.deformed])
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[t] = PseudoGroup(gens, self.R, f"{self.base.label}_t", invs)
        return self._cache[t]

    def constants(self) -> dict[str, float]:
        return {"D": self.D, "eps": self.eps, "R": float(self.R), "C": self.C}


def deform_generator(g1: Germ, D: int, t: complex) -> Germ:
    """``z -> g1(z) + t z^(D+1)``; ``g1`` itself when ``t == 0``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    return g1 if complex(t) == 0 else DeformedGerm(g1, D, t)


def _walk(family: DeformationFamily, w: Word, t: complex, p: complex):
    """Value, derivative and t-derivative of the word at ``p``."""
    G = family.group(t)
    z = complex(p)
    der = 1 + 0j
    dt = 0j
    D = family.D
    for i, e in w.application_order():
        g = G.letter(i, e)
        dz = complex(np.asarray(g.derivative(np.array([z])))[0])
        out = complex(np.asarray(g(np.array([z])))[0])
        if not cmath.isfinite(out):
            raise LeftDomain("letter could not be evaluated")
        dt = dt * dz
        if i == family.deformed:
            if e > 0:
                dt += z ** (D + 1)
            else:
                # g(y) = z with y = out: dt g(y) + g'(y) dy/dt = 0
                gy = family.group(t).generators[i]
                dt += -(out ** (D + 1)) / complex(np.asarray(gy.derivative(np.array([out])))[0])
        der *= dz
        z = out
    return z, der, dt


def continuation_rhs(family: DeformationFamily, w: Word, t: complex, p: complex, tol: float = 1e-10) -> complex:
    """``dp/dt`` at a fixed point ``p`` of the word at parameter ``t``."""
    _, der, dt = _walk(family, w, t, p)
    if abs(der - 1) < tol:
        raise DegenerateFixedPoint(f"|f'(p) - 1| = {abs(der - 1):.3g} below {tol}")
    return dt / (1 - der)


def closed_form_rhs(family: DeformationFamily, w: Word, t: complex, p: complex, reading: str = "corrected") -> complex:
    """Closed-form candidates built from ``f_t'(p)`` and ``g_{1,t}'(p)`` only.

    ``literal``:   p^(D+1) f'/(f' - 1) * g1'(p)
    ``corrected``: -p^(D+1) f'/((f' - 1) g1'(p))

    The corrected form equals ``continuation_rhs`` when the only deformed
    letter is the first one applied.
    """
    _, der, _ = _walk(family, w, t, p)
    g1 = family.group(t).generators[family.deformed]
    d1 = complex(np.asarray(g1.derivative(np.array([complex(p)])))[0])
    base = complex(p) ** (family.D + 1) * der / (der - 1)
    if reading == "literal":
        return base * d1
    if reading == "corrected":
        return -base / d1
    raise ValueError(f"unknown reading {reading!r}")


def fixed_point_newton(
    family: DeformationFamily, w: Word, t: complex, guess: complex, tol: float = 1e-13, max_iter: int = 60
) -> tuple[complex, float, complex]:
    """Newton solve of ``f_t(p) = p``; returns (p, residual, multiplier)."""
    p = complex(guess)
    for _ in range(max_iter):
        val, der, _ = _walk(family, w, t, p)
        r = val - p
        if abs(r) <= tol:
            break
        if der == 1:
            raise DegenerateFixedPoint("f'(p) = 1 during Newton iteration")
        p = p - r / (der - 1)
        if abs(p) > family.R:
            raise LeftDomain(f"Newton iterate left |z| <= {family.R}")
    val = complex(evaluate_word(family.group(t), w, p))
    _, der, _ = _walk(family, w, t, p)
    return p, abs(val - p), der


@dataclass
class TrackedFixedPoint:
    word: Word
    samples: list[tuple[complex, complex, complex, float]]  # (t, p, multiplier, residual)
    max_residual: float
    breakdown: str | None = None
    detail: str = ""

    @property
    def ts(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def points(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def multipliers(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])


def track_fixed_point(
    family: DeformationFamily,
    w: Word,
    p0: complex,
    t_end: complex,
    steps: int = 20,
    tau: float = 1e-3,
    residual_bound: float = 1e-10,
    verify_tol: float = 1e-8,
) -> TrackedFixedPoint:
    """Predictor-corrector continuation along the segment from 0 to ``t_end``.

    Predictor: classical RK4 on ``continuation_rhs``.  Corrector: Newton on
    ``f_t(p) - p``.  Degeneracy, domain exit, Newton failure or loss of
    hyperbolicity stop the run with ``breakdown`` set.
    """
    G0 = family.group(0)
    try:
        val = complex(evaluate_word(G0, w, p0))
    except LeftDomain as exc:
        raise InitialPointRejected(f"word cannot be evaluated at p0: {exc}") from exc
    if abs(val - p0) > verify_tol:
        raise InitialPointRejected(f"|f(p0) - p0| = {abs(val - p0):.3g} exceeds {verify_tol}")
    p, res, m = fixed_point_newton(family, w, 0, p0)
    if abs(abs(m) - 1) <= tau:
        raise InitialPointRejected(f"p0 is not hyperbolic: |f'(p0)| = {abs(m)}")
    out = TrackedFixedPoint(w, [(0j, p, m, res)], res)
    t_end = complex(t_end)
    h = t_end / steps

    def rhs(t, z):
        return continuation_rhs(family, w, t, z)

    for k in range(steps):
        t = k * h
        t_next = (k + 1) * h
        try:
            k1 = rhs(t, p)
            k2 = rhs(t + h / 2, p + h * k1 / 2)
            k3 = rhs(t + h / 2, p + h * k2 / 2)
            k4 = rhs(t_next, p + h * k3)
            guess = p + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            p_new, res, m = fixed_point_newton(family, w, t_next, guess)
        except DegenerateFixedPoint as exc:
            out.breakdown, out.detail = "degenerate", str(exc)
            break
        except (LeftDomain, ValueError) as exc:
            out.breakdown, out.detail = "domain-exit", str(exc)
            break
        if res > residual_bound or not cmath.isfinite(p_new):
            out.breakdown, out.detail = "corrector-failed", f"residual {res:.3g}"
            break
        if abs(abs(m) - 1) <= tau:
            out.samples.append((t_next, p_new, m, res))
            out.max_residual = max(out.max_residual, res)
            out.breakdown, out.detail = "hyperbolicity-loss", f"|f'(p)| = {abs(m)}"
            break
        p = p_new
        out.samples.append((t_next, p, m, res))
        out.max_residual = max(out.max_residual, res)
    return out


def oracle_path(family: DeformationFamily, w: Word, p0: complex, ts: Sequence[complex]) -> np.ndarray:
    """Independent Newton solves at each ``t``, each started from ``p0``."""
    return np.array([fixed_point_newton(family, w, t, p0)[0] for t in ts])


def cauchy_derivative(family: DeformationFamily, w: Word, p0: complex, rho: float, nodes: int = 32) -> complex:
    """``p'(0)`` from the trapezoidal rule for ``(1/2 pi i) \\oint p(t) / t^2 dt`` on ``|t| = rho``."""
    th = 2 * math.pi * np.arange(nodes) / nodes
    ts = rho * np.exp(1j * th)
    ps = oracle_path(family, w, p0, ts)
    return complex(np.mean(ps * np.exp(-1j * th)) / rho)


@dataclass
class PersistenceTable:
    rows: list[tuple[complex, int, float]]  # (t, budget, coverage)
    hypotheses: str
    constants: dict = field(default_factory=dict)


def density_persistence_probe(
    family: DeformationFamily,
    t_samples: Sequence[complex],
    radius: float,
    budget: int,
    eps: float,
    seed: int = 0,
    hypotheses: str = "caller-asserted",
    workers: int = 1,
) -> PersistenceTable:
    rows = []
    for t in t_samples:
        rep = orbit_density_probe(family.group(t), radius, [budget], eps, seed=seed, workers=workers)
        rows.append((complex(t), budget, rep.rows[0][1]))
    return PersistenceTable(rows, hypotheses, family.constants())

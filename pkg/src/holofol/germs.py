"""One-dimensional germs at 0, words over them, and pseudo-group dynamics.

Germs act on numpy arrays of complex points.  A word is written
``f_n * ... * f_1`` and applied right to left; letters are stored in the
written order.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


class LeftDomain(ArithmeticError):
    """A point left the region where the maps are defined.

    ``step`` is the number of letters applied successfully before the exit
    (0-based index, in application order, of the failing letter).
    """

    def __init__(self, message: str, step: int | None = None, indices=None):
        super().__init__(message)
        self.step = step
        self.indices = indices


class Germ:
    """Holomorphic germ ``(C, 0) -> (C, 0)`` evaluable on arrays."""

    label: str = "germ"

    def __call__(self, z):
        raise NotImplementedError

    def derivative(self, z):
        """Complex derivative; default is a 4th-order central difference."""
        z = np.asarray(z, dtype=complex)
        h = 1e-4 * np.maximum(1.0, np.abs(z))
        return (8 * (self(z + h) - self(z - h)) - (self(z + 2 * h) - self(z - 2 * h))) / (12 * h)

    def inverse(self) -> "Germ":
        return NewtonInverse(self)

    @property
    def multiplier(self) -> complex:
        return complex(np.asarray(self.derivative(np.array([0j])))[0])


class PolynomialGerm(Germ):
    """``sum_k coeffs[k] z^(k+1)``."""

    def __init__(self, coeffs: Sequence[complex], label: str = "g"):
        self.coeffs = np.array(coeffs, dtype=complex)
        if len(self.coeffs) == 0 or self.coeffs[0] == 0:
            raise ValueError("a germ needs a non-zero linear coefficient")
        self.label = label
        # numpy's polyval wants descending powers, constant term last
        self._desc = np.concatenate([self.coeffs[::-1], [0j]])
        self._ddesc = np.polyder(self._desc)

    def __call__(self, z):
        return np.polyval(self._desc, np.asarray(z, dtype=complex))

    def derivative(self, z):
        return np.polyval(self._ddesc, np.asarray(z, dtype=complex))

    def __repr__(self):
        return f"PolynomialGerm({self.label}: {list(self.coeffs)})"


class CallableGerm(Germ):
    def __init__(self, fn: Callable, dfn: Callable | None = None, inverse: "Germ | None" = None, label="g"):
        self.fn, self.dfn, self._inverse, self.label = fn, dfn, inverse, label

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    def derivative(self, z):
        if self.dfn is None:
            return super().derivative(z)
        return self.dfn(np.asarray(z, dtype=complex))

    def inverse(self) -> Germ:
        return self._inverse if self._inverse is not None else NewtonInverse(self)


class DeformedGerm(Germ):
    """``z -> base(z) + t z^(D+1)``."""

    def __init__(self, base: Germ, D: int, t: complex):
        if D < 1:
            raise ValueError("D must be >= 1")
        self.base, self.D, self.t = base, int(D), complex(t)
        self.label = base.label

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.base(z)
        return out if self.t == 0 else out + self.t * z ** (self.D + 1)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.base.derivative(z)
        return out if self.t == 0 else out + (self.D + 1) * self.t * z**self.D


class NewtonInverse(Germ):
    """Local inverse of a germ, solved pointwise by Newton's method near ``z / f'(0)``."""

    def __init__(self, base: Germ, tol: float = 1e-14, max_iter: int = 60):
        self.base, self.tol, self.max_iter = base, tol, max_iter
        self.label = base.label + "^-1"
        self._a1 = base.multiplier

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        y = z / self._a1
        done = np.zeros(z.shape, dtype=bool)
        for _ in range(self.max_iter):
            r = self.base(y) - z
            done = np.abs(r) <= self.tol * np.maximum(1.0, np.abs(z))
            if done.all():
                break
            y = np.where(done, y, y - r / self.base.derivative(y))
        return np.where(done, y, np.nan + 0j)

    def derivative(self, z):
        return 1.0 / self.base.derivative(self(z))

    def inverse(self) -> Germ:
        return self.base


# -- words ---------------------------------------------------------------------


Letter = tuple[int, int]


@dataclass(frozen=True)
class Word:
    """Letters ``(generator index, +1|-1)`` in written order; the last letter acts first."""

    letters: tuple[Letter, ...] = ()

    @classmethod
    def of(cls, *letters: Letter) -> "Word":
        return cls(tuple((int(i), int(e)) for i, e in letters))

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple((i, -e) for i, e in reversed(self.letters)))

    def reduced(self) -> "Word":
        out: list[Letter] = []
        for i, e in self.letters:
            if out and out[-1] == (i, -e):
                out.pop()
            else:
                out.append((i, e))
        return Word(tuple(out))

    def is_reduced(self) -> bool:
        return self.reduced() == self

    def application_order(self) -> tuple[Letter, ...]:
        return tuple(reversed(self.letters))

    def label(self, names: Sequence[str]) -> str:
        if not self.letters:
            return "e"
        return "*".join(names[i] + ("" if e > 0 else "^-1") for i, e in self.letters)

    def compact(self) -> str:
        return " ".join(f"{i + 1}{'+' if e > 0 else '-'}" for i, e in self.letters)

    def is_proper_power(self) -> bool:
        n = len(self.letters)
        return any(n % d == 0 and self.letters == self.letters[:d] * (n // d) for d in range(1, n))


def reduced_words(generators: int, max_length: int, min_length: int = 1):
    """All reduced words in ``generators`` letters and their inverses, by length then lexicographically."""
    alphabet = [(i, e) for i in range(generators) for e in (1, -1)]
    level: list[tuple[Letter, ...]] = [()]
    for length in range(1, max_length + 1):
        level = [w + (a,) for w in level for a in alphabet if not w or w[-1] != (a[0], -a[1])]
        if length >= min_length:
            yield from (Word(w) for w in level)


# -- pseudo-groups ---------------------------------------------------------------


@dataclass
class PseudoGroup:
    """Generators with a common domain ``|z| <= radius``; inverses are attached once."""

    generators: list[Germ]
    radius: float
    label: str = "G"
    inverses: list[Germ] = field(default_factory=list)

    def __post_init__(self):
        if not self.inverses:
            self.inverses = [g.inverse() for g in self.generators]
        if len(self.inverses) != len(self.generators):
            raise ValueError("one inverse per generator")

    @property
    def names(self) -> list[str]:
        return [getattr(g, "label", f"g{i + 1}") or f"g{i + 1}" for i, g in enumerate(self.generators)]

    def letter(self, i: int, e: int) -> Germ:
        return self.generators[i] if e > 0 else self.inverses[i]


def evaluate_word(G: PseudoGroup, w: Word, z, check_domain: bool = True) -> np.ndarray:
    """Apply ``w`` right to left; raises ``LeftDomain`` naming the failing letter."""
    scalar = np.ndim(z) == 0
    out = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    for step, (i, e) in enumerate(w.application_order()):
        out = np.asarray(G.letter(i, e)(out), dtype=complex)
        bad = ~np.isfinite(out)
        if check_domain:
            bad |= np.abs(out) > G.radius
        if bad.any():
            raise LeftDomain(
                f"letter {step} ({w.label(G.names)}) maps {int(bad.sum())} point(s) outside |z| <= {G.radius}",
                step,
                np.flatnonzero(bad),
            )
    return out[0] if scalar else out


def word_derivative(G: PseudoGroup, w: Word, z) -> tuple[np.ndarray, np.ndarray]:
    """Value and chain-rule derivative of the word at ``z`` (no domain check)."""
    val = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    der = np.ones_like(val)
    for i, e in w.application_order():
        g = G.letter(i, e)
        der = der * g.derivative(val)
        val = np.asarray(g(val), dtype=complex)
    return val, der


@dataclass(frozen=True)
class MultiplierEstimate:
    value: complex
    error: float


def richardson_derivative(fn: Callable, p: complex, h: float, levels: int = 3) -> MultiplierEstimate:
    """Richardson-extrapolated central differences along the real and imaginary axes.

    ``fn`` is vectorized; the two directional estimates are averaged and the
    error bar combines the last Richardson correction with their disagreement.
    """
    hs = h / 2.0 ** np.arange(levels)
    dirs = np.array([1.0, 1j])
    pts = np.concatenate([p + s * d * hs for d in dirs for s in (1.0, -1.0)])
    vals = np.asarray(fn(pts), dtype=complex).reshape(2, 2, levels)
    estimates, errors = [], []
    for k, d in enumerate(dirs):
        table = [(vals[k, 0] - vals[k, 1]) / (2 * hs * d)]
        for j in range(1, levels):
            prev = table[-1]
            table.append((4**j * prev[1:] - prev[:-1]) / (4**j - 1))
        estimates.append(table[-1][0])
        errors.append(abs(table[-1][0] - table[-2][-1]))
    value = 0.5 * (estimates[0] + estimates[1])
    err = max(errors) + abs(estimates[0] - estimates[1])
    return MultiplierEstimate(complex(value), float(err))


def word_multiplier(G: PseudoGroup, w: Word, p: complex, h: float | None = None) -> MultiplierEstimate:
    h = 1e-3 * G.radius if h is None else h
    return richardson_derivative(lambda z: evaluate_word(G, w, z), complex(p), h)


# -- hyperbolic fixed points ---------------------------------------------------------


@dataclass(frozen=True)
class FixedPointRecord:
    word: Word
    label: str
    location: complex
    multiplier: complex
    hyperbolic: bool
    residual: float


@dataclass
class FixedPointSearch:
    records: list[FixedPointRecord]
    words_tried: int
    seeds_tried: int
    converged: int
    left_domain: int
    not_converged: int
    non_hyperbolic: int
    outside_region: int

    def summary(self) -> str:
        return (
            f"words={self.words_tried} seeds={self.seeds_tried} converged={self.converged} "
            f"left_domain={self.left_domain} not_converged={self.not_converged} "
            f"non_hyperbolic={self.non_hyperbolic} outside_region={self.outside_region} "
            f"records={len(self.records)}"
        )


def annulus_seeds(r_in: float, r_out: float, rings: int = 4, per_ring: int = 12) -> np.ndarray:
    radii = np.linspace(r_in, r_out, rings + 2)[1:-1] if r_in > 0 else np.linspace(0, r_out, rings + 1)
    pts = [0j] if r_in == 0 else []
    for k, rho in enumerate(radii):
        if rho == 0:
            continue
        phase = 0.5 * k * 2 * math.pi / per_ring
        pts.extend(rho * np.exp(1j * (phase + 2 * math.pi * np.arange(per_ring) / per_ring)))
    return np.array(pts, dtype=complex)


def newton_fixed_points(G: PseudoGroup, w: Word, seeds: np.ndarray, tol: float, max_iter: int = 50):
    """Vectorized Newton on ``w(z) - z``; returns (points, converged mask, left-domain mask)."""
    z = seeds.astype(complex).copy()
    alive = np.ones(z.shape, dtype=bool)
    left = np.zeros(z.shape, dtype=bool)
    conv = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(alive & ~conv)
        if idx.size == 0:
            break
        val, der = word_derivative(G, w, z[idx])
        bad = ~np.isfinite(val) | ~np.isfinite(der)
        r = val - z[idx]
        conv[idx[~bad & (np.abs(r) <= tol)]] = True
        step = np.where(bad, 0, r / np.where(der == 1, np.nan, der - 1))
        nz = z[idx] - step
        out = bad | ~np.isfinite(nz) | (np.abs(nz) > G.radius)
        left[idx[out]] = True
        alive[idx[out]] = False
        keep = ~out & ~conv[idx]
        z[idx[keep]] = nz[keep]
    # final polish and contract re-check with a domain-checked evaluation
    ok = np.flatnonzero(conv & alive)
    for j in ok:
        try:
            res = abs(complex(evaluate_word(G, w, z[j])) - z[j])
        except LeftDomain:
            conv[j] = False
            left[j] = True
            continue
        if res > tol:
            conv[j] = False
    return z, conv, left


def find_hyperbolic_fixed_points(
    G: PseudoGroup,
    max_length: int = 3,
    annulus: tuple[float, float] = (0.0, None),
    tol: float = 1e-12,
    tau: float = 1e-3,
    seeds: np.ndarray | None = None,
    dedup: float = 1e-8,
    workers: int = 1,
) -> FixedPointSearch:
    """Fixed points of reduced words (proper powers skipped) with ``| |f'(p)| - 1 | > tau``."""
    r_in, r_out = annulus[0], annulus[1] if annulus[1] is not None else G.radius
    seeds = annulus_seeds(r_in, r_out) if seeds is None else np.asarray(seeds, dtype=complex)
    words = [w for w in reduced_words(len(G.generators), max_length) if not w.is_proper_power()]

    def solve(w: Word):
        z, conv, left = newton_fixed_points(G, w, seeds, tol)
        recs, stats = [], dict(conv=int(conv.sum()), left=int(left.sum()), nc=0, nh=0, out=0)
        stats["nc"] = int((~conv & ~left).sum())
        found: list[complex] = []
        for p in z[conv]:
            if not (r_in - dedup <= abs(p) <= r_out + dedup):
                stats["out"] += 1
                continue
            if any(abs(p - q) <= max(dedup, 1e3 * tol) for q in found):
                continue
            found.append(complex(p))
        for p in sorted(found, key=lambda c: (round(c.real, 10), round(c.imag, 10))):
            _, der = word_derivative(G, w, p)
            m = complex(der[0])
            hyp = abs(abs(m) - 1.0) > tau
            if not hyp:
                stats["nh"] += 1
                continue
            res = abs(complex(evaluate_word(G, w, p)) - p)
            recs.append(FixedPointRecord(w, w.label(G.names), p, m, True, float(res)))
        return recs, stats

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, words))
    else:
        results = [solve(w) for w in words]
    records = [r for recs, _ in results for r in recs]
    tot = {k: sum(s[k] for _, s in results) for k in ("conv", "left", "nc", "nh", "out")}
    return FixedPointSearch(
        records, len(words), len(words) * len(seeds), tot["conv"], tot["left"], tot["nc"], tot["nh"], tot["out"]
    )


# -- orbit density -----------------------------------------------------------------


@dataclass
class CoverageReport:
    radius: float
    epsilon: float
    mesh_points: int
    seed: int
    streams: int
    rows: list[tuple[int, float]]  # (budget, coverage)
    visited: np.ndarray

    def coverage(self, budget: int) -> float:
        return dict(self.rows)[budget]


def disk_mesh(radius: float, eps: float) -> np.ndarray:
    """Square lattice of spacing ``eps`` restricted to the closed disk."""
    k = int(math.floor(radius / eps))
    g = eps * np.arange(-k, k + 1)
    pts = (g[:, None] + 1j * g[None, :]).ravel()
    return pts[np.abs(pts) <= radius + 1e-12]


BATCH = 64


def _explore(
    G: PseudoGroup, seeds: np.ndarray, steps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Random pseudo-orbit exploration in batches.

    Each batch draws ``BATCH`` (pool index, letter) pairs from ``rng``
    regardless of how many are used, so a shorter run is an exact prefix of
    a longer one.  Returns the pool and, for every step count ``s``, the
    pool size after ``s`` steps.
    """
    letters = [(i, e) for i in range(len(G.generators)) for e in (1, -1)]
    pool = list(seeds)
    sizes = [len(pool)]
    done = 0
    while done < steps:
        size = len(pool)
        u = rng.random(BATCH)
        choice = rng.integers(0, len(letters), BATCH)
        take = min(BATCH, steps - done)
        idx = np.minimum((u[:take] * size).astype(int), size - 1)
        src = np.array(pool, dtype=complex)[idx]
        new = np.empty(take, dtype=complex)
        for a, (i, e) in enumerate(letters):
            mask = choice[:take] == a
            if mask.any():
                with np.errstate(all="ignore"):
                    new[mask] = G.letter(i, e)(src[mask])
        ok = np.isfinite(new) & (np.abs(new) <= G.radius)
        pool.extend(new[ok])
        sizes.extend(size + np.cumsum(ok))
        done += take
    return np.array(pool, dtype=complex), np.array(sizes, dtype=int)


def orbit_density_probe(
    G: PseudoGroup,
    radius: float,
    budgets: Sequence[int],
    eps: float,
    seed: int = 0,
    seeds_per_stream: int = 4,
    streams: int = 4,
    workers: int = 1,
) -> CoverageReport:
    """Fraction of an ``eps``-mesh of the closed ``radius``-disk within ``eps`` of a visited point.

    The budget is split over a fixed number of independent random streams
    (derived from ``seed``), so the result does not depend on ``workers``.
    Coverage at every requested budget comes from prefixes of the same run
    and is therefore non-decreasing in the budget.
    """
    if radius > G.radius:
        raise ValueError("probe radius exceeds the common domain")
    budgets = sorted(set(int(b) for b in budgets))
    if budgets and budgets[0] < 0:
        raise ValueError("budgets must be non-negative")
    mesh = disk_mesh(radius, eps)
    children = np.random.SeedSequence(seed).spawn(streams)
    top = budgets[-1] if budgets else 0

    def run(s: int):
        rng = np.random.default_rng(children[s])
        rho = radius * np.sqrt(rng.random(seeds_per_stream))
        start = rho * np.exp(2j * math.pi * rng.random(seeds_per_stream))
        share = top // streams + (1 if s < top % streams else 0)
        return _explore(G, start, share, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(streams)))
    else:
        runs = [run(s) for s in range(streams)]

    rows = []
    for b in budgets:
        parts = []
        for s, (pool_pts, sizes) in enumerate(runs):
            share = b // streams + (1 if s < b % streams else 0)
            parts.append(pool_pts[: sizes[share]])
        rows.append((b, _coverage(mesh, np.concatenate(parts), eps)))
    visited = np.concatenate([p for p, _ in runs])
    return CoverageReport(radius, eps, len(mesh), seed, streams, rows, visited)


def _coverage(mesh: np.ndarray, pts: np.ndarray, eps: float) -> float:
    if mesh.size == 0 or pts.size == 0:
        return 0.0
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    d, _ = tree.query(np.column_stack([mesh.real, mesh.imag]), k=1, distance_upper_bound=eps * (1 + 1e-12))
    return float(np.count_nonzero(np.isfinite(d))) / mesh.size


def linear_germ(multiplier: complex, label: str = "g") -> PolynomialGerm:
    return PolynomialGerm([multiplier], label)


def rotation_multiplier(lam: complex) -> complex:
    """``exp(2 pi i lam)``."""
    return cmath.exp(2j * math.pi * lam)


"""Finitely generated groups of jets: growth, derived series, limit homomorphism.

Every verdict here holds modulo order-``k`` jets: two distinct germs can
share a ``k``-jet, so nothing is claimed at germ level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np

from .jets import Jet, commutator, jet_compose, jet_inverse

Letter = tuple[int, int]  # (generator index, +1 | -1)


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, table: "GrowthTable"):
        super().__init__(message)
        self.table = table


class CapExceeded(RuntimeError):
    pass


class AllGeneratorsVanish(ValueError):
    pass


class TruncationDominates(ValueError):
    pass


@dataclass
class GeneratorSet:
    """Generators paired with their order-k inverses."""

    labels: list[str]
    jets: list[Jet]
    inverses: list[Jet]

    @classmethod
    def from_jets(cls, jets: Sequence[Jet], labels: Sequence[str] | None = None) -> "GeneratorSet":
        if not jets:
            raise ValueError("need at least one generator")
        n, k = jets[0].n, jets[0].k
        for j in jets:
            if (j.n, j.k) != (n, k):
                raise ValueError("all generators must share (n, k)")
        labels = list(labels) if labels else [f"g{i + 1}" for i in range(len(jets))]
        return cls(labels, list(jets), [jet_inverse(j) for j in jets])

    @property
    def n(self) -> int:
        return self.jets[0].n

    @property
    def k(self) -> int:
        return self.jets[0].k

    def letters(self) -> list[tuple[Letter, Jet]]:
        out = []
        for i, (g, gi) in enumerate(zip(self.jets, self.inverses)):
            out.append(((i, 1), g))
            out.append(((i, -1), gi))
        return out

    def symmetric_size(self) -> int:
        """Number of distinct jets in the symmetric system S."""
        return len({j for _, j in self.letters()})

    def word_jet(self, word: Sequence[Letter]) -> Jet:
        """Jet of ``f_n o ... o f_1`` for the letters written left to right."""
        out = Jet.identity(self.n, self.k)
        for i, e in word:
            out = jet_compose(out, self.jets[i] if e > 0 else self.inverses[i])
        return out

    def format_word(self, word: Sequence[Letter]) -> str:
        if not word:
            return "e"
        return "*".join(self.labels[i] + ("" if e > 0 else "^-1") for i, e in word)


# -- growth -------------------------------------------------------------------


@dataclass
class GrowthTable:
    rows: list[tuple[int, int, int]]  # (n, gamma(n), new elements at depth n)
    symmetric_size: int
    jet_order: int
    complete: bool = True

    @property
    def gamma(self) -> list[int]:
        return [g for _, g, _ in self.rows]

    def ball_bound(self, n: int) -> int:
        s = self.symmetric_size
        return sum(s**i for i in range(n + 1))


def growth_function(
    S: GeneratorSet, n_max: int, max_elements: int = 250_000, workers: int = 1
) -> GrowthTable:
    """Breadth-first ball counts ``gamma(n) = |B(n)|`` with exact jet deduplication.

    Elements are multiplied on the right by letters, so each generator's
    monomial table is built once.  Expansion can be split across threads;
    the merge is sequential in frontier order, so the table never depends
    on ``workers``.
    """
    letters = [j for _, j in S.letters()]
    ident = Jet.identity(S.n, S.k)
    seen = {ident}
    frontier = [ident]
    table = GrowthTable([(0, 1, 1)], S.symmetric_size(), S.k)

    def expand(chunk):
        return [jet_compose(e, s) for e in chunk for s in letters]

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for depth in range(1, n_max + 1):
            if pool is None:
                products = expand(frontier)
            else:
                size = max(1, math.ceil(len(frontier) / workers))
                chunks = [frontier[i : i + size] for i in range(0, len(frontier), size)]
                products = [p for part in pool.map(expand, chunks) for p in part]
            new = []
            for p in products:
                if p not in seen:
                    seen.add(p)
                    new.append(p)
            table.rows.append((depth, len(seen), len(new)))
            frontier = new
            if len(seen) > max_elements:
                table.complete = False
                raise BudgetExceeded(
                    f"ball of radius {depth} has {len(seen)} elements (> {max_elements})", table
                )
    finally:
        if pool is not None:
            pool.shutdown()
    return table


def free_abelian_growth_formula(m: int, n: int) -> int:
    """Ball size of radius ``n`` in Z^m with the standard generators."""
    if m < 0 or n < 0:
        raise ValueError("rank and radius must be non-negative")
    return sum(2**l * math.comb(m, l) * math.comb(n, l) for l in range(m + 1))


@dataclass
class GrowthVerdict:
    kind: str  # "polynomial" | "exponential" | "inconclusive"
    parameter: float  # degree c or exponential rate
    log_fit: tuple[float, float, float]  # slope, intercept, rms residual of log g vs log n
    linear_fit: tuple[float, float, float]  # slope, intercept, rms residual of log g vs n
    margin: float
    rows_used: tuple[int, int]
    note: str = ""

    def line(self) -> str:
        return (
            f"verdict={self.kind} parameter={self.parameter!r} "
            f"log_fit=(slope={self.log_fit[0]!r}, rms={self.log_fit[2]!r}) "
            f"linear_fit=(slope={self.linear_fit[0]!r}, rms={self.linear_fit[2]!r}) "
            f"margin={self.margin!r} rows={self.rows_used[0]}..{self.rows_used[1]} "
            f"scope=modulo order-k jets{'; ' + self.note if self.note else ''}"
        )


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), rms


def classify_growth(
    table: GrowthTable, margin: float = 0.5, min_rate: float = 0.1, tail: float = 0.5
) -> GrowthVerdict:
    """Compare least-squares fits of log gamma against log n and against n.

    Growth type is asymptotic, so only the upper ``tail`` fraction of the
    rows (at least three) enters the fits.  Exponential when the linear fit
    residual is below ``margin`` times the log-log residual and the rate
    exceeds ``min_rate``; polynomial symmetrically; otherwise inconclusive.
    """
    rows = [(n, g) for n, g, _ in table.rows if n >= 1]
    if len(table.rows) < 6:
        raise ValueError("classification needs at least 6 rows")
    start = min(int(math.floor(rows[-1][0] * (1 - tail))), rows[-3][0])
    start = max(start, 1)
    used = [(n, g) for n, g in rows if n >= start]
    ns = np.array([n for n, _ in used], dtype=float)
    lg = np.log(np.array([g for _, g in used], dtype=float))
    log_fit = _fit(np.log(ns), lg)
    lin_fit = _fit(ns, lg)
    span = (int(ns[0]), int(ns[-1]))
    if np.ptp(lg) == 0.0:
        return GrowthVerdict("polynomial", 0.0, log_fit, lin_fit, margin, span, "bounded group: gamma constant")
    tiny = 1e-12
    if lin_fit[2] < margin * log_fit[2] - tiny and lin_fit[0] > min_rate:
        return GrowthVerdict("exponential", lin_fit[0], log_fit, lin_fit, margin, span)
    if log_fit[2] < margin * lin_fit[2] - tiny:
        return GrowthVerdict("polynomial", log_fit[0], log_fit, lin_fit, margin, span)
    return GrowthVerdict("inconclusive", math.nan, log_fit, lin_fit, margin, span)


# -- derived series -----------------------------------------------------------


@dataclass
class DerivedLevel:
    index: int
    generators: int
    trivial: bool
    inconclusive: bool = False


@dataclass
class DerivedSeriesReport:
    levels: list[DerivedLevel]
    terminating_level: int | None
    jet_order: int
    cap: int
    notes: list[str] = field(default_factory=list)

    def text(self) -> str:
        lines = [f"# derived series modulo order-{self.jet_order} jets, cap {self.cap} generators per level"]
        for lv in self.levels:
            flag = "trivial" if lv.trivial else "non-trivial"
            if lv.inconclusive:
                flag += " (inconclusive: cap exceeded)"
            lines.append(f"G_{lv.index}: generators={lv.generators} {flag}")
        term = "none within depth" if self.terminating_level is None else f"G_{self.terminating_level}"
        lines.append(f"terminates at: {term}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def derived_series(S: GeneratorSet, max_depth: int = 4, cap: int = 64) -> DerivedSeriesReport:
    """Word-generated approximations of ``G_{i+1} = [G_i, G_i]``.

    Level ``i+1`` is generated by the commutators of all pairs of level-``i``
    generators and their inverses.  Above ``cap`` generators the level is
    truncated and marked inconclusive.
    """
    ident = Jet.identity(S.n, S.k)
    gens = [g for g in S.jets if g != ident]
    levels = [DerivedLevel(0, len(gens), not gens)]
    notes = []
    terminating = 0 if not gens else None
    for depth in range(1, max_depth + 1):
        if terminating is not None:
            levels.append(DerivedLevel(depth, 0, True))
            continue
        pool = []
        for g in gens:
            pool.append(g)
            gi = jet_inverse(g)
            if gi != g:
                pool.append(gi)
        comms: list[Jet] = []
        seen = set()
        inconclusive = False
        for a in range(len(pool)):
            for b in range(a + 1, len(pool)):
                c = commutator(pool[a], pool[b])
                if c == ident or c in seen:
                    continue
                if len(comms) >= cap:
                    inconclusive = True
                    break
                seen.add(c)
                comms.append(c)
            if inconclusive:
                break
        if inconclusive:
            notes.append(f"level {depth}: more than {cap} commutators, truncated")
        trivial = not comms
        levels.append(DerivedLevel(depth, len(comms), trivial, inconclusive))
        if trivial:
            terminating = depth
        gens = comms
    return DerivedSeriesReport(levels, terminating, S.k, cap, notes)


# -- cocycle identity and limit homomorphism ----------------------------------


def cocycle_defect(u: Jet, v: Jet) -> Jet:
    """``(v o u)~ - (u~ + v~ + [v~ o u - v~])``; identically zero for jets."""
    vt = v.tilde()
    return jet_compose(v, u).tilde() - (u.tilde() + vt + (jet_compose(vt, u) - vt))


def integral_identity_defect(u: Jet, v: Jet, z, nodes: int = 24) -> float:
    """Numeric defect of ``v~(u(z)) = v~(z) + sum_i u~_i(z) int_0^1 dv~/dx_i(z + t u~(z)) dt``.

    For holomorphic ``v~`` the real-coordinate sum equals the complex one
    over ``dv~/dz_j``, evaluated here by Gauss-Legendre quadrature.
    """
    z = np.asarray(z, dtype=complex).reshape(u.n)
    vt, ut = v.tilde(), u.tilde()
    du = ut.evaluate(z)
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    ts, ws = 0.5 * (xs + 1.0), 0.5 * ws
    integral = sum(w * vt.jacobian(z + t * du) for t, w in zip(ts, ws))
    lhs = vt.evaluate(u.evaluate(z))
    rhs = vt.evaluate(z) + integral @ du
    return float(np.max(np.abs(lhs - rhs)))


def _realify(v: np.ndarray) -> np.ndarray:
    out = np.empty(2 * v.size)
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


@dataclass
class LimitHomomorphismEstimate:
    ms: list[int]
    scales: list[float]  # M_m
    truncation_ratio: list[float]  # |z_m|^(k+1) / M_m
    generator_vectors: list[np.ndarray]  # b_i at the last m
    words: list[str]
    values: dict[str, list[np.ndarray]]  # per word, one vector per m
    additivity: list[tuple[str, str, list[float]]]

    def estimate(self, word: str) -> np.ndarray:
        return self.values[word][-1]

    def convergence(self, word: str) -> float:
        v = self.values[word]
        return float(np.linalg.norm(v[-1] - v[-2])) if len(v) > 1 else math.nan


def limit_homomorphism(
    S: GeneratorSet,
    words: Sequence[Sequence[Letter]],
    ms: Sequence[int] = (10, 100, 1000),
    z0=None,
    pairs: Sequence[tuple[int, int]] = (),
) -> LimitHomomorphismEstimate:
    """Estimate ``h -> lim h~(z_m) / M_m`` along ``z_m = z0 / m``.

    ``M_m`` is the largest generator displacement at ``z_m``.  ``pairs``
    index into ``words``; for each the additivity residual
    ``|f(h1 h2) - f(h1) - f(h2)|`` is reported per ``m``.
    """
    if not all(g.is_tangent_to_identity() for g in S.jets):
        raise ValueError("limit homomorphism needs generators tangent to the identity")
    n, k = S.n, S.k
    z0 = np.ones(n, dtype=complex) if z0 is None else np.asarray(z0, dtype=complex).reshape(n)
    tildes = [g.tilde() for g in S.jets] + [g.tilde() for g in S.inverses]
    word_jets = [S.word_jet(w) for w in words]
    labels = [S.format_word(w) for w in words]
    pair_jets = [(a, b, jet_compose(word_jets[a], word_jets[b])) for a, b in pairs]
    scales, ratios, values = [], [], {lab: [] for lab in labels}
    add = [(labels[a], labels[b], []) for a, b in pairs]
    gen_vecs: list[np.ndarray] = []
    for m in ms:
        zm = z0 / m
        disp = [t.evaluate(zm) for t in tildes[: len(S.jets)]]
        M = max(float(np.linalg.norm(d)) for d in disp)
        if M == 0.0:
            raise AllGeneratorsVanish(f"every generator displacement vanishes at m = {m}")
        ratio = float(np.linalg.norm(zm)) ** (k + 1) / M
        scales.append(M)
        ratios.append(ratio)
        gen_vecs = [_realify(d / M) for d in disp]
        vecs = []
        for lab, wj in zip(labels, word_jets):
            vec = _realify(wj.tilde().evaluate(zm) / M)
            values[lab].append(vec)
            vecs.append(vec)
        for (a, b, pj), rec in zip(pair_jets, add):
            prod = _realify(pj.tilde().evaluate(zm) / M)
            rec[2].append(float(np.linalg.norm(prod - vecs[a] - vecs[b])))
    if ratios[-1] >= 1.0:
        raise TruncationDominates(
            f"|z_m|^(k+1)/M_m = {ratios[-1]:.3g} at m = {ms[-1]}: raise the jet order or shorten the sequence"
        )
    return LimitHomomorphismEstimate(list(ms), scales, ratios, gen_vecs, labels, values, add)

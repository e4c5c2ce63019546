"""Command-line entry point: ``holofol {analyze,holonomy,track,growth}``.

Exit codes: 0 success, 2 invalid input, 3 solver diagnostics, 4 rejected
initial fixed point, 5 growth budget exceeded (partial table written).
"""

from __future__ import annotations

import argparse
import cmath
import hashlib
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .deformation import (
    DeformationFamily,
    InitialPointRejected,
    cauchy_derivative,
    closed_form_rhs,
    continuation_rhs,
    fixed_point_newton,
    oracle_path,
    track_fixed_point,
)
from .foliation import (
    LINE_AT_INFINITY,
    FoliationError,
    InvariantLine,
    Region,
    class_membership,
    is_line_at_infinity_invariant,
    scan_affine_singularities,
    singularities_at_infinity,
    tangency_degrees,
    tangency_polynomial,
)
from .germs import LeftDomain, Word, evaluate_word, find_hyperbolic_fixed_points, orbit_density_probe
from .groups import (
    BudgetExceeded,
    GeneratorSet,
    TruncationDominates,
    AllGeneratorsVanish,
    classify_growth,
    derived_series,
    growth_function,
    limit_homomorphism,
)
from .holonomy import (
    HolonomyGenerators,
    HolonomyMap,
    LoopError,
    LoopPath,
    MultipleRoot,
    NearSingularity,
    TransverseDisk,
    chart_field,
    check_disk,
    common_radius,
    holonomy_generators,
    surrogate_group,
)
from .io import InputError, header_lines, load_json, parse_family, parse_foliation, parse_jets, parse_loops, write_csv, write_text
from .jets import JetError

EXIT_INVALID, EXIT_SOLVER, EXIT_INITIAL, EXIT_BUDGET = 2, 3, 4, 5
# orbit steps for the holonomy coverage probe; an empirical choice, not a theoretical threshold
DEFAULT_DENSITY_BUDGET = 20000


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _file_sha(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config(args, **extra) -> dict:
    """Everything that determines the outputs; the output directory and worker count are excluded."""
    skip = {"out", "workers", "func", "input", "loops"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    cfg["input_sha256"] = _file_sha(args.input)
    if getattr(args, "loops", None):
        cfg["loops_sha256"] = _file_sha(args.loops)
    cfg.update(extra)
    return cfg


def _c(z: complex) -> tuple[float, float]:
    z = complex(z)
    return float(z.real), float(z.imag)


def _foliation(args):
    try:
        return parse_foliation(load_json(args.input))
    except FoliationError as exc:
        raise CommandFailed(EXIT_INVALID, f"invalid foliation: {exc}") from exc
    except InputError as exc:
        raise CommandFailed(EXIT_INVALID, str(exc)) from exc


# -- analyze -----------------------------------------------------------------------


def cmd_analyze(args) -> int:
    F = _foliation(args)
    out = Path(args.out)
    cfg = _config(args)
    head = header_lines("analyze", cfg, args.seed)
    region = Region.box(args.region)
    rep = class_membership(F, region, args.grid)
    scan = scan_affine_singularities(F, region, args.grid)
    rows = []
    sings = rep.affine + rep.infinity
    for k, s in enumerate(sings):
        cl = rep.classes[k]
        rows.append(
            [
                s.chart,
                *_c(s.location[0]),
                *_c(s.location[1]),
                *_c(s.eigenvalues[0]),
                *_c(s.eigenvalues[1]),
                *_c(s.lam),
                cl.non_degenerate,
                cl.hyperbolic,
                cl.reduced,
                cl.saddle_type,
                float(s.residual),
            ]
        )
    cols = "chart,loc_re1,loc_im1,loc_re2,loc_im2,eig1_re,eig1_im,eig2_re,eig2_im,lambda_re,lambda_im,nondeg,hyp,red,saddle,residual"
    write_csv(out / "singularities.csv", head, cols.split(","), rows)

    degs = tangency_degrees(F, 5, args.seed)
    invariant = is_line_at_infinity_invariant(F)
    try:
        tangency_polynomial(F, LINE_AT_INFINITY)
        signal = False
    except InvariantLine:
        signal = True
    lines = [
        f"degree: {F.n}",
        f"tangency degrees on 5 random lines: {degs}",
        f"line at infinity invariant: {invariant}",
        f"tangency along the line at infinity identically zero: {signal}",
        f"S(n): {rep.S}",
        f"T(n): {rep.T}",
        f"X(n): {rep.X}",
        f"H(n): {rep.H}",
        f"affine singularities: {len(rep.affine)} (region box radius {args.region}, grid {args.grid})",
        f"singularities on the line at infinity: {len(rep.infinity)}",
        f"newton seeds: {scan.seeds} not converged: {scan.failures}",
    ]
    for k, s in enumerate(sings):
        if s.multiple:
            lines.append(f"note: singularity {k} has multiplicity {s.multiplicity}")
    lines.extend(f"note: {n}" for n in rep.notes)
    write_text(out / "report.txt", head, "\n".join(lines) + "\n")
    if args.svg and rep.infinity:
        from .plotting import singularity_plot

        pts = [s.location[1] if s.chart == "infinity" else complex("inf") for s in rep.infinity]
        finite = [(p, f"lambda={s.lam:.3g}") for p, s in zip(pts, rep.infinity) if cmath.isfinite(p)]
        if finite:
            singularity_plot(out / "singularities_infinity.svg", [p for p, _ in finite], [t for _, t in finite])
    bad_degree = any(d != F.n for d in degs)
    bad_residual = any(s.residual > 1e-8 for s in rep.infinity)
    if bad_degree or bad_residual or signal != invariant:
        raise CommandFailed(EXIT_SOLVER, "solver diagnostics: tangency degree or residual check failed (see report.txt)")
    return 0


# -- holonomy ------------------------------------------------------------------------


def _holonomy_setup(F, args) -> tuple[HolonomyGenerators, list[complex | None]]:
    field_ = chart_field(F)
    if args.loops:
        spec = parse_loops(load_json(args.loops))
        disk = TransverseDisk(spec.q, spec.r)
        sings = singularities_at_infinity(F)
        finite = [s for s in sings if s.chart == "infinity"]
        pts = [complex(s.location[1]) for s in finite]
        check_disk(field_, disk, pts)
        loops, maps, lams, centers = [], [], [], []
        for k, (c, rad) in enumerate(spec.loops):
            lp = LoopPath.circle(spec.q, c, rad, 1, f"loop_{k + 1}")
            if lp.clearance(pts) <= 0:
                raise LoopError(f"loop {k + 1} passes through a singular point")
            inside = [i for i, p in enumerate(pts) if lp.winding_number(p) != 0]
            lams.append(finite[inside[0]].lam if len(inside) == 1 else None)
            centers.append(c)
            loops.append(lp)
            maps.append(HolonomyMap(field_, lp, disk, args.tol, args.tube, lp.label))
        gens = HolonomyGenerators(field_, disk, centers, False, loops, maps, lams)
        return gens, centers
    gens = holonomy_generators(F, radius=args.radius, tol=args.tol, tube=args.tube)
    centers = list(gens.singular) + ([None] if gens.at_infinity else [])
    return gens, centers


def cmd_holonomy(args) -> int:
    F = _foliation(args)
    if not is_line_at_infinity_invariant(F):
        raise CommandFailed(EXIT_INVALID, "invalid input: the line at infinity is not invariant")
    out = Path(args.out)
    budget = DEFAULT_DENSITY_BUDGET if args.budget is None else args.budget
    cfg = _config(args, budget=budget)
    head = header_lines("holonomy", cfg, args.seed, ["composition: hol(a*b) = hol(b) o hol(a); words apply right to left"])
    try:
        gens, centers = _holonomy_setup(F, args)
        mults = [m.multiplier_estimate() for m in gens.maps]
        lin = [m.linearized_multiplier() for m in gens.maps]
        delta = common_radius(gens, args.tube)
        G, fit_errors = surrogate_group(gens, delta, args.degree)
    except (MultipleRoot, LoopError, InputError) as exc:
        raise CommandFailed(EXIT_INVALID, f"invalid input: {exc}") from exc
    except (NearSingularity, LeftDomain) as exc:
        raise CommandFailed(EXIT_SOLVER, f"solver diagnostics: {exc}") from exc

    rows = []
    for k, (m, est, li, c, lam) in enumerate(zip(gens.maps, mults, lin, centers, gens.characteristic)):
        oracle = cmath.exp(2j * math.pi * lam) if lam is not None else None
        dev = abs(est.value - oracle) / abs(oracle) if oracle is not None else None
        rows.append(
            [k + 1, m.label, *(_c(c) if c is not None else ("inf", "inf")), *(_c(lam) if lam is not None else ("", "")),
             *_c(est.value), est.error, *_c(li), *(_c(oracle) if oracle is not None else ("", "")), dev]
        )
    write_csv(
        out / "generators.csv",
        head + [f"q: {gens.disk.q!r}", f"disk radius: {gens.disk.radius!r}"] + [f"note: {n}" for n in gens.notes],
        "index,label,center_re,center_im,lambda_re,lambda_im,mult_re,mult_im,mult_err,linearized_re,linearized_im,oracle_re,oracle_im,rel_dev".split(","),
        rows,
    )

    search = find_hyperbolic_fixed_points(G, args.max_length, (0.0, delta), tol=args.tol, workers=args.workers)
    true_group = gens.pseudo_group(delta)
    atlas, dropped = [], 0
    for r in search.records:
        try:
            res = abs(complex(evaluate_word(true_group, r.word, r.location, check_domain=False)) - r.location)
        except (LeftDomain, NearSingularity):
            dropped += 1
            continue
        if res > args.verify * max(delta, 1.0):
            dropped += 1
            continue
        atlas.append([r.label, r.word.compact(), *_c(r.location), *_c(r.multiplier), abs(r.multiplier), r.hyperbolic, res])
    extra = [
        f"common domain radius: {delta!r}",
        f"surrogate degree: {args.degree}",
        f"surrogate fit errors: {' '.join(repr(e) for e in fit_errors)}",
        f"search: {search.summary()}",
        f"records failing re-verification with path lifting: {dropped}",
    ]
    write_csv(out / "atlas.csv", head + extra, "word,letters,loc_re,loc_im,mult_re,mult_im,abs_mult,hyperbolic,residual".split(","), atlas)

    budgets = sorted({0, budget // 8, budget // 4, budget // 2, budget})
    probe_r = 0.5 * delta
    eps = args.eps if args.eps is not None else probe_r / 25
    cov = orbit_density_probe(G, probe_r, budgets, eps, seed=args.seed, workers=args.workers)
    write_csv(
        out / "coverage.csv",
        head + [f"probe radius: {probe_r!r}", f"mesh points: {cov.mesh_points}", "empirical coverage; no theoretical threshold"],
        ["budget", "epsilon", "coverage"],
        [(b, eps, c) for b, c in cov.rows],
    )
    if args.svg:
        from .plotting import coverage_curve, orbit_scatter

        orbit_scatter(out / "orbit.svg", cov.visited, probe_r, [complex(a[2], a[3]) for a in atlas])
        coverage_curve(out / "coverage.svg", cov.rows)
    return 0


# -- track -----------------------------------------------------------------------------


def _auto_words(family: DeformationFamily, count: int = 3):
    G = family.base
    search = find_hyperbolic_fixed_points(G, 3, (0.05 * G.radius, 0.5 * G.radius))
    picked, seen = [], set()
    for r in search.records:
        if abs(r.location) > 0 and r.word not in seen:
            picked.append((r.word, r.location))
            seen.add(r.word)
        if len(picked) == count:
            break
    return picked


def _track_one(family, w, p0, spec, args):
    T = track_fixed_point(family, w, p0, spec.t_end, spec.steps, residual_bound=args.tol)
    orc = oracle_path(family, w, p0, T.ts)
    dev = np.abs(orc - T.points)
    rhs0 = continuation_rhs(family, w, 0, T.samples[0][1])
    sweep = []
    for h in (1e-2, 1e-3, 1e-4):
        h = h * family.eps
        p_h = fixed_point_newton(family, w, h, T.samples[0][1])[0]
        sweep.append((h, abs((p_h - T.samples[0][1]) / h - rhs0)))
    cauchy = cauchy_derivative(family, w, T.samples[0][1], 0.1 * family.eps)
    closed = {r: closed_form_rhs(family, w, 0, T.samples[0][1], r) for r in ("literal", "corrected")}
    return T, dev, rhs0, sweep, cauchy, closed


def cmd_track(args) -> int:
    try:
        spec = parse_family(load_json(args.input))
        family = DeformationFamily(spec.group, spec.D, spec.eps, spec.deformed, C=spec.C)
    except (InputError, ValueError) as exc:
        raise CommandFailed(EXIT_INVALID, f"invalid input: {exc}") from exc
    out = Path(args.out)
    cfg = _config(args)
    head = header_lines("track", cfg, args.seed)
    G = family.base
    jobs = []
    for w, p0 in spec.words or _auto_words(family):
        if p0 is None:
            raise CommandFailed(EXIT_INVALID, f"word {w.label(G.names)} needs an initial point p0")
        jobs.append((w, p0))
    if not jobs:
        raise CommandFailed(EXIT_INITIAL, "no hyperbolic fixed point found to track")

    def run(job):
        try:
            return _track_one(family, job[0], job[1], spec, args)
        except InitialPointRejected as exc:
            return exc

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    summary, plots = [], []
    for k, ((w, p0), res) in enumerate(zip(jobs, results)):
        label = w.label(G.names)
        if isinstance(res, InitialPointRejected):
            raise CommandFailed(EXIT_INITIAL, f"word {label}: initial fixed point rejected: {res}")
        T, dev, rhs0, sweep, cauchy, closed = res
        rows = []
        for j, ((t, p, m, r), d) in enumerate(zip(T.samples, dev)):
            flag = T.breakdown if (T.breakdown and j == len(T.samples) - 1) else "ok"
            rows.append([*_c(t), *_c(p), *_c(m), abs(m), r, flag, float(d)])
        write_csv(
            out / f"track_{k + 1}.csv",
            head + [f"word: {label}", f"p0: {p0!r}", f"family constants: {family.constants()}"],
            "t_re,t_im,p_re,p_im,mult_re,mult_im,abs_mult,residual,flag,oracle_dev".split(","),
            rows,
        )
        summary += [
            f"[{k + 1}] word {label}",
            f"  breakdown: {T.breakdown or 'none'} {T.detail}".rstrip(),
            f"  samples: {len(T.samples)} max residual: {T.max_residual!r} max |continuation - oracle|: {float(dev.max())!r}",
            f"  dp/dt at t=0: {rhs0!r}",
            "  oracle difference quotient error (h, |err|): " + " ".join(f"({h!r}, {e!r})" for h, e in sweep),
            f"  contour-integral derivative error: {abs(cauchy - rhs0)!r}",
            f"  closed form, literal reading error: {abs(closed['literal'] - rhs0)!r}",
            f"  closed form, corrected reading error: {abs(closed['corrected'] - rhs0)!r}",
        ]
        plots.append((label, T.points, T.multipliers))
    write_text(out / "track_summary.txt", head, "\n".join(summary) + "\n")
    if args.svg:
        from .plotting import tracking_plot

        tracking_plot(out / "tracking.svg", plots)
    return 0


# -- growth ------------------------------------------------------------------------------


def cmd_growth(args) -> int:
    try:
        spec = parse_jets(load_json(args.input))
        S = GeneratorSet.from_jets(spec.jets, spec.labels)
    except (InputError, JetError, ValueError) as exc:
        raise CommandFailed(EXIT_INVALID, f"invalid input: {exc}") from exc
    out = Path(args.out)
    budget = 250_000 if args.budget is None else args.budget
    cfg = _config(args, budget=budget)
    head = header_lines("growth", cfg, args.seed, [f"verdicts hold modulo order-{S.k} jets"])
    code = 0
    try:
        table = growth_function(S, args.nmax, budget, args.workers)
    except BudgetExceeded as exc:
        table, code = exc.table, EXIT_BUDGET
    write_csv(out / "growth.csv", head + ([] if table.complete else ["# partial table: budget exceeded"]),
              ["n", "gamma", "new_elements"], table.rows)
    lines = []
    bound_ok = all(g <= table.ball_bound(n) for n, g, _ in table.rows)
    monotone = all(a <= b for a, b in zip(table.gamma, table.gamma[1:]))
    lines.append(f"symmetric generators: {table.symmetric_size}")
    lines.append(f"non-decreasing: {monotone}; ball bound sum_(i<=n) #S^i holds: {bound_ok}")
    if len(table.rows) >= 6:
        lines.append(classify_growth(table).line())
    else:
        lines.append("verdict=inconclusive (fewer than 6 rows)")
    write_text(out / "verdict.txt", head, "\n".join(lines) + "\n")
    if args.derived:
        rep = derived_series(S, args.depth, args.cap)
        write_text(out / "derived_series.txt", head, rep.text())
    if all(j.is_tangent_to_identity() for j in S.jets):
        _limit_report(S, out, head)
    if args.svg:
        from .plotting import growth_plot

        growth_plot(out / "growth.svg", table.rows)
    if code:
        raise CommandFailed(code, f"budget of {budget} elements exceeded; partial table written")
    return 0


def _limit_report(S: GeneratorSet, out: Path, head: list[str]) -> None:
    r = len(S.jets)
    words = [[(i, 1)] for i in range(r)] + [[(i, -1)] for i in range(r)]
    pairs = []
    for a in range(r):
        for b in range(r):
            words.append([(a, 1), (b, 1)])
            pairs.append((a, b, len(words) - 1))
    try:
        est = limit_homomorphism(S, words, pairs=[(a, b) for a, b, _ in pairs])
    except (TruncationDominates, AllGeneratorsVanish) as exc:
        write_text(out / "limit_homomorphism.txt", head, f"not computed: {exc}\n")
        return
    cols = ["word", "m", "M_m", "truncation_ratio"] + [f"c{j}_{p}" for j in range(S.n) for p in ("re", "im")]
    rows = []
    for w in est.words:
        for k, m in enumerate(est.ms):
            rows.append([w, m, est.scales[k], est.truncation_ratio[k], *[float(x) for x in est.values[w][k]]])
    write_csv(out / "limit_homomorphism.csv", head, cols, rows)
    add_rows = [(a, b, m, res) for a, b, seq in est.additivity for m, res in zip(est.ms, seq)]
    write_csv(out / "additivity.csv", head, ["word1", "word2", "m", "residual"], add_rows)


# -- entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holofol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol):
        sp.add_argument("--input", required=True, help="input JSON document")
        sp.add_argument("--out", required=True, help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, default=0, help="random seed (recorded in every header)")
        sp.add_argument("--tol", type=float, default=tol, help="solver tolerance")
        sp.add_argument("--budget", type=int, default=None, help="work budget")
        sp.add_argument("--svg", action="store_true", help="also write SVG figures")
        sp.add_argument("--workers", type=int, default=1, help="threads; outputs do not depend on it")

    a = sub.add_parser("analyze", help="foliation report: classes, singularities, tangency check")
    common(a, 1e-12)
    a.add_argument("--region", type=float, default=2.0, help="half-width of the affine search box")
    a.add_argument("--grid", type=int, default=32)
    a.set_defaults(func=cmd_analyze)

    h = sub.add_parser("holonomy", help="generator multipliers, fixed-point atlas, orbit coverage")
    common(h, 1e-10)
    h.add_argument("--loops", default=None, help="loop/disk JSON; canonical loops when omitted")
    h.add_argument("--radius", type=float, default=0.05, help="transverse disk radius for canonical loops")
    h.add_argument("--tube", type=float, default=1.0, help="lifts leaving |u| <= tube are rejected")
    h.add_argument("--max-length", type=int, default=2, dest="max_length")
    h.add_argument("--degree", type=int, default=12, help="surrogate polynomial degree")
    h.add_argument("--eps", type=float, default=None, help="coverage mesh spacing")
    h.add_argument("--verify", type=float, default=1e-8, help="path-lifting re-verification threshold")
    h.set_defaults(func=cmd_holonomy)

    t = sub.add_parser("track", help="continuation of hyperbolic fixed points in a deformation")
    common(t, 1e-10)
    t.set_defaults(func=cmd_track)

    g = sub.add_parser("growth", help="growth table, verdict, derived series, limit homomorphism")
    common(g, 0.0)
    g.add_argument("--nmax", type=int, default=8)
    g.add_argument("--derived", action="store_true")
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--cap", type=int, default=64)
    g.set_defaults(func=cmd_growth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    if not Path(args.input).is_file():
        print(f"error: input file {args.input} not found", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

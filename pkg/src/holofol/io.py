"""Input documents (JSON) and report files (CSV / text) with a provenance header."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from collections.abc import Iterable, Sequence

from . import __version__
from .exact import cq
from .foliation import FoliationNormalForm, validate_normal_form
from .germs import PolynomialGerm, PseudoGroup, Word
from .jets import Jet
from .polynomial import BivariatePolynomial


class InputError(ValueError):
    """Malformed or invalid input document."""


def load_json(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno} (char {exc.pos}): {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    return doc


def _need(doc: dict, key: str, kind=None):
    if key not in doc:
        raise InputError(f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise InputError(f"field {key!r} must be {kind.__name__ if isinstance(kind, type) else kind}")
    return val


def _rational(value, where: str):
    try:
        return cq(str(value), 0)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise InputError(f"{where}: {value!r} is not a rational number") from exc


def _poly(terms, where: str) -> BivariatePolynomial:
    if not isinstance(terms, list):
        raise InputError(f"{where} must be a list of terms")
    out = {}
    for k, t in enumerate(terms):
        if not isinstance(t, dict):
            raise InputError(f"{where}[{k}] must be an object")
        i, j = t.get("i"), t.get("j")
        if not (isinstance(i, int) and isinstance(j, int)) or i < 0 or j < 0:
            raise InputError(f"{where}[{k}]: exponents i, j must be non-negative integers")
        re = _rational(t.get("re", "0"), f"{where}[{k}].re")
        im = _rational(t.get("im", "0"), f"{where}[{k}].im")
        c = cq(re.x, im.x)
        out[(i, j)] = out.get((i, j), cq(0, 0)) + c
    return BivariatePolynomial(out)


def parse_foliation(doc: dict) -> FoliationNormalForm:
    """``{"n": int, "P": [...], "Q": [...], "g": [...]}``; validation errors propagate."""
    n = _need(doc, "n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise InputError("field 'n' must be a non-negative integer")
    P = _poly(_need(doc, "P"), "P")
    Q = _poly(_need(doc, "Q"), "Q")
    g = _poly(doc.get("g", []), "g")
    return validate_normal_form(P, Q, g, n)


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise InputError(f"{where}: expected a number or [re, im]")


def _positive(value, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0 or not math.isfinite(value):
        raise InputError(f"{where} must be a positive number")
    return float(value)


@dataclass(frozen=True)
class LoopSpec:
    q: complex
    r: float
    loops: list[tuple[complex, float]]


def parse_loops(doc: dict) -> LoopSpec:
    """``{"q": [re, im], "r": num, "loops": [{"center": [re, im], "radius": num}]}``."""
    q = _complex(_need(doc, "q"), "q")
    r = _positive(_need(doc, "r"), "r")
    loops = []
    for k, lp in enumerate(doc.get("loops", [])):
        if not isinstance(lp, dict):
            raise InputError(f"loops[{k}] must be an object")
        loops.append((_complex(_need(lp, "center"), f"loops[{k}].center"), _positive(_need(lp, "radius"), f"loops[{k}].radius")))
    return LoopSpec(q, r, loops)


@dataclass
class FamilySpec:
    group: PseudoGroup
    D: int
    eps: float
    deformed: int
    C: float
    words: list[tuple[Word, complex | None]]
    t_end: complex
    steps: int


def parse_word(text: str, names: Sequence[str]) -> Word:
    """``"f*g^-1*f"`` in written order."""
    letters = []
    for part in text.split("*"):
        part = part.strip()
        e = 1
        if part.endswith("^-1"):
            part, e = part[:-3], -1
        if part not in names:
            raise InputError(f"unknown generator {part!r} in word {text!r}")
        letters.append((list(names).index(part), e))
    return Word(tuple(letters))


def parse_family(doc: dict) -> FamilySpec:
    """Pseudo-group of polynomial germs plus a deformation and tracking request.

    ``{"radius": num,
       "generators": [{"label": str, "coeffs": [[re, im], ...]}],   # coefficient of z^1, z^2, ...
       "deform": {"generator": 1, "D": int, "eps": num, "C": num},
       "track": {"words": [{"word": "f*g", "p0": [re, im]}], "t_end": [re, im], "steps": int}}``
    """
    radius = _positive(_need(doc, "radius"), "radius")
    gens = []
    for k, g in enumerate(_need(doc, "generators", list)):
        label = g.get("label", f"g{k + 1}")
        coeffs = [_complex(c, f"generators[{k}].coeffs") for c in _need(g, "coeffs", list)]
        try:
            gens.append(PolynomialGerm(coeffs, label))
        except ValueError as exc:
            raise InputError(f"generators[{k}]: {exc}") from exc
    if not gens:
        raise InputError("at least one generator is required")
    names = [g.label for g in gens]
    if len(set(names)) != len(names):
        raise InputError("generator labels must be distinct")
    deform = _need(doc, "deform", dict)
    index = _need(deform, "generator")
    if not isinstance(index, int) or not 1 <= index <= len(gens):
        raise InputError("deform.generator must be a 1-based generator index")
    D = _need(deform, "D")
    if not isinstance(D, int) or D < 1:
        raise InputError("deform.D must be a positive integer")
    eps = _positive(_need(deform, "eps"), "deform.eps")
    C = float(deform.get("C", 0.1))
    track = doc.get("track", {})
    words = []
    for k, item in enumerate(track.get("words", [])):
        w = parse_word(_need(item, "word", str), names)
        p0 = _complex(item["p0"], f"track.words[{k}].p0") if "p0" in item else None
        words.append((w, p0))
    t_end = _complex(track.get("t_end", 0.5 * eps), "track.t_end")
    steps = track.get("steps", 20)
    if not isinstance(steps, int) or steps < 1:
        raise InputError("track.steps must be a positive integer")
    return FamilySpec(PseudoGroup(gens, radius), D, eps, index - 1, C, words, t_end, steps)


@dataclass
class JetSpec:
    labels: list[str]
    jets: list[Jet]


def parse_jets(doc: dict) -> JetSpec:
    """``{"n", "k", "generators": [{"label", "coeffs": [{"out", "multi", "re", "im"}]}]}``."""
    n, k = _need(doc, "n"), _need(doc, "k")
    if not (isinstance(n, int) and isinstance(k, int)) or n < 1 or k < 1:
        raise InputError("n and k must be positive integers")
    labels, jets = [], []
    for a, g in enumerate(_need(doc, "generators", list)):
        comps = [{} for _ in range(n)]
        for b, c in enumerate(_need(g, "coeffs", list)):
            where = f"generators[{a}].coeffs[{b}]"
            out, multi = c.get("out"), c.get("multi")
            if not isinstance(out, int) or not 0 <= out < n:
                raise InputError(f"{where}.out must be in 0..{n - 1}")
            if not isinstance(multi, list) or len(multi) != n or any(not isinstance(e, int) or e < 0 for e in multi):
                raise InputError(f"{where}.multi must be {n} non-negative integers")
            if not 1 <= sum(multi) <= k:
                raise InputError(f"{where}: total degree must be in 1..{k}")
            re = _rational(c.get("re", "0"), where + ".re")
            im = _rational(c.get("im", "0"), where + ".im")
            comps[out][tuple(multi)] = cq(re.x, im.x)
        labels.append(str(g.get("label", f"g{a + 1}")))
        jets.append(Jet(n, k, comps))
    if not jets:
        raise InputError("at least one generator is required")
    return JetSpec(labels, jets)


# -- output ------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; ints and strings unchanged."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def header_lines(command: str, config: dict, seed: int, extra: Iterable[str] = ()) -> list[str]:
    lines = [
        f"# holofol {__version__}",
        f"# command: {command}",
        f"# config_sha256: {config_hash(config)}",
        f"# seed: {seed}",
    ]
    for key in sorted(k for k in config if k not in ("command", "seed")):
        lines.append(f"# {key}: {config[key]}")
    lines.extend(f"# {e}" for e in extra)
    return lines


def _comment(line: str) -> str:
    return line if line.startswith("#") else "# " + line


def write_csv(path: Path, header: list[str], columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Header lines become ``#`` comments, then the column row and the data rows."""
    buf = io.StringIO()
    for line in header:
        buf.write(_comment(line) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_text(path: Path, header: list[str], body: str) -> None:
    path.write_text("\n".join(_comment(h) for h in header) + "\n" + body, encoding="utf-8")

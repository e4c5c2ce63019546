"""Bivariate polynomials with exact Gaussian-rational coefficients."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.polys.domains import QQ_I

from .exact import ONE, ZERO, as_cq, to_complex

X, Y = sp.symbols("x y")


class BivariatePolynomial:
    """Immutable sparse polynomial ``sum c_ij x^i y^j``.

    Zero coefficients are never stored; the zero polynomial has an empty
    term map and degree ``-inf``.
    """

    __slots__ = ("_terms", "_hash", "_numeric")

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        clean = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent ({i}, {j})")
            c = as_cq(c)
            if c:
                key = (int(i), int(j))
                clean[key] = clean.get(key, ZERO) + c
                if not clean[key]:
                    del clean[key]
        self._terms = dict(sorted(clean.items()))
        self._hash = None
        self._numeric = None

    # construction helpers
    @classmethod
    def zero(cls) -> "BivariatePolynomial":
        return cls()

    @classmethod
    def constant(cls, c) -> "BivariatePolynomial":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "BivariatePolynomial":
        return cls({(1, 0): ONE})

    @classmethod
    def y(cls) -> "BivariatePolynomial":
        return cls({(0, 1): ONE})

    @classmethod
    def from_sympy(cls, expr, gens=(X, Y)) -> "BivariatePolynomial":
        poly = sp.Poly(expr, *gens, domain=QQ_I)
        return cls(poly.rep.to_dict())

    # basic properties
    @property
    def terms(self) -> dict[tuple[int, int], object]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> float:
        if not self._terms:
            return -math.inf
        return max(i + j for i, j in self._terms)

    def degree_in(self, var: int) -> float:
        if not self._terms:
            return -math.inf
        return max(k[var] for k in self._terms)

    def is_homogeneous(self, d: int) -> bool:
        return all(i + j == d for i, j in self._terms)

    def homogeneous_part(self, d: int) -> "BivariatePolynomial":
        return BivariatePolynomial({k: c for k, c in self._terms.items() if sum(k) == d})

    def coefficient(self, i: int, j: int):
        return self._terms.get((i, j), ZERO)

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, ZERO) + c
        return BivariatePolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePolynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict[tuple[int, int], object] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, ZERO) + c1 * c2
        return BivariatePolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power")
        result = BivariatePolynomial.constant(ONE)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, BivariatePolynomial):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"BivariatePolynomial({self.to_sympy()})"

    def diff(self, var: int) -> "BivariatePolynomial":
        out = {}
        for (i, j), c in self._terms.items():
            e = (i, j)[var]
            if e:
                k = (i - 1, j) if var == 0 else (i, j - 1)
                out[k] = c * QQ_I(e, 0)
        return BivariatePolynomial(out)

    def monomial_divide(self, a: int, b: int) -> "BivariatePolynomial":
        """Exact division by ``x^a y^b`` (raises if not divisible)."""
        out = {}
        for (i, j), c in self._terms.items():
            if i < a or j < b:
                raise ArithmeticError(f"x^{a} y^{b} does not divide the polynomial")
            out[(i - a, j - b)] = c
        return BivariatePolynomial(out)

    def min_exponents(self) -> tuple[int, int]:
        if not self._terms:
            return (0, 0)
        return (min(i for i, _ in self._terms), min(j for _, j in self._terms))

    # restrictions
    def restrict_x(self, value) -> list:
        """Coefficients (ascending in y) of the univariate polynomial p(value, y)."""
        value = as_cq(value)
        deg = int(self.degree_in(1)) if self._terms else -1
        out = [ZERO] * (deg + 1)
        for (i, j), c in self._terms.items():
            out[j] = out[j] + c * value**i
        return trim(out)

    def along_line(self, point, direction) -> list:
        """Coefficients (ascending in s) of p(point + s*direction), exact."""
        x0, y0 = (as_cq(c) for c in point)
        dx, dy = (as_cq(c) for c in direction)
        lx = [x0, dx]
        ly = [y0, dy]
        out = [ZERO]
        for (i, j), c in self._terms.items():
            term = upoly_mul(upoly_pow(lx, i), upoly_pow(ly, j))
            out = upoly_add(out, [c * t for t in term])
        return trim(out)

    # exact and numeric evaluation
    def evaluate_exact(self, x, y):
        x, y = as_cq(x), as_cq(y)
        total = ZERO
        for (i, j), c in self._terms.items():
            total += c * x**i * y**j
        return total

    def _numeric_data(self):
        if self._numeric is None:
            keys = list(self._terms)
            ei = np.array([k[0] for k in keys], dtype=int)
            ej = np.array([k[1] for k in keys], dtype=int)
            cs = np.array([to_complex(self._terms[k]) for k in keys], dtype=complex)
            self._numeric = (ei, ej, cs)
        return self._numeric

    def __call__(self, x, y):
        """Floating-point evaluation; broadcasts over numpy arrays."""
        ei, ej, cs = self._numeric_data()
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for a, b, c in zip(ei, ej, cs):
            out = out + c * x**a * y**b
        return out

    def to_sympy(self):
        return sum(
            (QQ_I.to_sympy(c) * X**i * Y**j for (i, j), c in self._terms.items()),
            sp.Integer(0),
        )

    def to_poly(self) -> sp.Poly:
        return sp.Poly(self.to_sympy(), X, Y, domain=QQ_I)


def _coerce(value) -> BivariatePolynomial:
    if isinstance(value, BivariatePolynomial):
        return value
    try:
        return BivariatePolynomial.constant(as_cq(value))
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot use {value!r} as a polynomial") from exc


# -- univariate helpers on coefficient lists (ascending powers) ---------------

def trim(coeffs: list) -> list:
    out = list(coeffs)
    while out and not out[-1]:
        out.pop()
    return out


def upoly_add(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else ZERO) + (b[i] if i < len(b) else ZERO) for i in range(n)]


def upoly_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return out


def upoly_pow(a: list, e: int) -> list:
    out = [ONE]
    for _ in range(e):
        out = upoly_mul(out, a)
    return out


def upoly_degree(coeffs: Iterable) -> float:
    c = trim(list(coeffs))
    return len(c) - 1 if c else -math.inf


def upoly_roots(coeffs: list) -> np.ndarray:
    """Numerical roots of an exact univariate polynomial (ascending coefficients)."""
    c = trim(coeffs)
    if len(c) <= 1:
        return np.array([], dtype=complex)
    return np.roots([to_complex(v) for v in reversed(c)])


def upoly_squarefree(coeffs: list) -> bool:
    """Exact test that the polynomial has no repeated root."""
    c = trim(coeffs)
    if len(c) <= 2:
        return True
    s = sp.Symbol("s")
    p = sp.Poly(list(reversed([QQ_I.to_sympy(v) for v in c])), s, domain=QQ_I)
    return sp.degree(sp.gcd(p, p.diff(s)), s) == 0

"""Truncated jets of self-maps of (C^n, 0) with exact Gaussian-rational coefficients.

A jet of order ``k`` stores, for each output coordinate, the coefficients
of the monomials of total degree 1..k.  Composition truncates at ``k``;
jets with invertible linear part form a group under it.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence

import numpy as np
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

from .exact import ONE, ZERO, as_cq, to_complex

MultiIndex = tuple[int, ...]
Poly = dict  # MultiIndex -> QQ_I element


class JetError(ValueError):
    pass


class DimensionMismatch(JetError):
    pass


class SingularLinearPart(JetError):
    pass


def _deg(a: MultiIndex) -> int:
    return sum(a)


def _add_into(out: Poly, p: Poly, scale=ONE) -> None:
    for m, c in p.items():
        v = out.get(m, ZERO) + scale * c
        if v:
            out[m] = v
        elif m in out:
            del out[m]


def _mul(p: Poly, q: Poly, k: int) -> Poly:
    qd = [(m, c, sum(m)) for m, c in q.items()]
    out: Poly = {}
    get = out.get
    for m1, c1 in p.items():
        room = k - sum(m1)
        if room <= 0:
            continue
        for m2, c2, d2 in qd:
            if d2 > room:
                continue
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = get(m, ZERO) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _unit(n: int, j: int) -> MultiIndex:
    return tuple(1 if i == j else 0 for i in range(n))


class Jet:
    """Order-``k`` jet of a map (C^n, 0) -> (C^n, 0)."""

    __slots__ = ("n", "k", "coeffs", "_key", "_monos", "_numeric")

    def __init__(self, n: int, k: int, coeffs: Sequence[Mapping[MultiIndex, object]]):
        if n < 1 or k < 1:
            raise JetError("dimension and order must be >= 1")
        if len(coeffs) != n:
            raise DimensionMismatch(f"expected {n} output coordinates, got {len(coeffs)}")
        clean = []
        for comp in coeffs:
            d: Poly = {}
            for m, c in comp.items():
                m = tuple(int(e) for e in m)
                if len(m) != n:
                    raise DimensionMismatch(f"multi-index {m} has wrong length for n = {n}")
                if _deg(m) == 0:
                    raise JetError("jets fix the origin: no constant terms")
                if _deg(m) > k:
                    continue
                c = as_cq(c)
                if c:
                    d[m] = d.get(m, ZERO) + c
            clean.append({m: c for m, c in sorted(d.items()) if c})
        self.n = n
        self.k = k
        self.coeffs = tuple(clean)
        self._key = None
        self._monos = None
        self._numeric = None

    # constructors
    @classmethod
    def identity(cls, n: int, k: int) -> "Jet":
        return cls(n, k, [{_unit(n, i): ONE} for i in range(n)])

    @classmethod
    def zero(cls, n: int, k: int) -> "Jet":
        return cls(n, k, [{} for _ in range(n)])

    @classmethod
    def linear(cls, matrix: Sequence[Sequence[object]], k: int) -> "Jet":
        n = len(matrix)
        return cls(n, k, [{_unit(n, j): matrix[i][j] for j in range(n)} for i in range(n)])

    @classmethod
    def univariate(cls, coeffs: Sequence[object], k: int) -> "Jet":
        """n = 1 jet ``sum coeffs[d-1] z^d``."""
        return cls(1, k, [{(d + 1,): c for d, c in enumerate(coeffs)}])

    # identity / hashing
    @property
    def key(self):
        if self._key is None:
            self._key = (self.n, self.k, tuple(tuple(c.items()) for c in self.coeffs))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Jet) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        parts = []
        for i, comp in enumerate(self.coeffs):
            terms = " + ".join(f"({c})*z^{list(m)}" for m, c in comp.items()) or "0"
            parts.append(f"[{i}] {terms}")
        return f"Jet(n={self.n}, k={self.k}; " + "; ".join(parts) + ")"

    # structure
    def linear_part(self) -> list[list]:
        return [[comp.get(_unit(self.n, j), ZERO) for j in range(self.n)] for comp in self.coeffs]

    def is_identity(self) -> bool:
        return self == Jet.identity(self.n, self.k)

    def is_tangent_to_identity(self) -> bool:
        L = self.linear_part()
        return all(L[i][j] == (ONE if i == j else ZERO) for i in range(self.n) for j in range(self.n))

    def is_invertible(self) -> bool:
        return bool(_dm(self.linear_part()).det())

    def __add__(self, other: "Jet") -> "Jet":
        _check(self, other)
        out = []
        for a, b in zip(self.coeffs, other.coeffs):
            d = dict(a)
            _add_into(d, b)
            out.append(d)
        return Jet(self.n, self.k, out)

    def __neg__(self) -> "Jet":
        return Jet(self.n, self.k, [{m: -c for m, c in comp.items()} for comp in self.coeffs])

    def __sub__(self, other: "Jet") -> "Jet":
        return self + (-other)

    def tilde(self) -> "Jet":
        """``h - id``."""
        return self - Jet.identity(self.n, self.k)

    # composition support
    def monomials(self) -> dict[MultiIndex, Poly]:
        """Truncated products ``prod_j self_j^{a_j}`` for every multi-index of degree 1..k (cached)."""
        if self._monos is None:
            monos: dict[MultiIndex, Poly] = {}
            for d in range(1, self.k + 1):
                for a in _multi_indices(self.n, d):
                    j = max(i for i, e in enumerate(a) if e)
                    prev = tuple(e - (1 if i == j else 0) for i, e in enumerate(a))
                    if _deg(prev) == 0:
                        monos[a] = dict(self.coeffs[j])
                    else:
                        monos[a] = _mul(monos[prev], self.coeffs[j], self.k)
            self._monos = monos
        return self._monos

    # numerics
    def _numeric_data(self):
        if self._numeric is None:
            data = []
            for comp in self.coeffs:
                exps = np.array(list(comp.keys()), dtype=int).reshape(-1, self.n)
                cs = np.array([to_complex(c) for c in comp.values()], dtype=complex)
                data.append((exps, cs))
            self._numeric = data
        return self._numeric

    def evaluate(self, z) -> np.ndarray:
        """Floating-point value at a point ``z`` of C^n."""
        z = np.asarray(z, dtype=complex).reshape(self.n)
        out = np.zeros(self.n, dtype=complex)
        for i, (exps, cs) in enumerate(self._numeric_data()):
            if len(cs):
                out[i] = np.sum(cs * np.prod(z[None, :] ** exps, axis=1))
        return out

    def jacobian(self, z) -> np.ndarray:
        """Complex Jacobian matrix at ``z``."""
        z = np.asarray(z, dtype=complex).reshape(self.n)
        J = np.zeros((self.n, self.n), dtype=complex)
        for i, (exps, cs) in enumerate(self._numeric_data()):
            for j in range(self.n):
                for e, c in zip(exps, cs):
                    if e[j] == 0:
                        continue
                    e2 = e.copy()
                    e2[j] -= 1
                    J[i, j] += c * e[j] * np.prod(z**e2)
        return J


def _multi_indices(n: int, d: int):
    for combo in itertools.combinations_with_replacement(range(n), d):
        a = [0] * n
        for i in combo:
            a[i] += 1
        yield tuple(a)


def _check(f: Jet, g: Jet) -> None:
    if f.n != g.n or f.k != g.k:
        raise DimensionMismatch(f"jets live in different spaces: (n,k)=({f.n},{f.k}) vs ({g.n},{g.k})")


def _dm(rows) -> DomainMatrix:
    n = len(rows)
    return DomainMatrix([list(r) for r in rows], (n, n), QQ_I)


def jet_compose(f: Jet, g: Jet) -> Jet:
    """Truncated composition ``f o g`` (``g`` applied first)."""
    _check(f, g)
    monos = g.monomials()
    out = []
    for comp in f.coeffs:
        acc: Poly = {}
        for a, c in comp.items():
            _add_into(acc, monos[a], c)
        out.append(acc)
    return Jet(f.n, f.k, out)


def apply_linear(M, J: Jet) -> Jet:
    """Jet ``M . J`` for an exact n x n matrix ``M``."""
    out = []
    for i in range(J.n):
        acc: Poly = {}
        for j in range(J.n):
            if M[i][j]:
                _add_into(acc, J.coeffs[j], M[i][j])
        out.append(acc)
    return Jet(J.n, J.k, out)


def truncate(f: Jet, k: int) -> Jet:
    """The same jet viewed at order ``k`` (higher terms dropped, missing ones zero)."""
    return Jet(f.n, k, f.coeffs)


def jet_inverse(f: Jet) -> Jet:
    """Formal inverse to order ``k``, solved degree by degree from ``h = L^{-1}(z - N(h))``.

    The degree-``d`` part of ``N(h)`` only involves ``h`` below degree ``d``,
    so each pass works at order ``d`` and fixes one more degree.
    """
    L = f.linear_part()
    dm = _dm(L)
    if not dm.det():
        raise SingularLinearPart("linear part is not invertible")
    Linv = dm.inv().to_list()
    nonlinear = f - Jet.linear(L, f.k)
    h = Jet.linear(Linv, f.k)
    for d in range(2, f.k + 1):
        hd = truncate(h, d)
        step = Jet.identity(f.n, d) - jet_compose(truncate(nonlinear, d), hd)
        h = truncate(apply_linear(Linv, step), f.k)
    return h


def commutator(f: Jet, g: Jet) -> Jet:
    """``f o g o f^-1 o g^-1``."""
    _check(f, g)
    return jet_compose(jet_compose(f, g), jet_compose(jet_inverse(f), jet_inverse(g)))


def random_jet(
    rng: np.random.Generator,
    n: int,
    k: int,
    *,
    span: int = 3,
    density: float = 0.6,
    tangent_to_identity: bool = False,
    complex_coeffs: bool = True,
) -> Jet:
    """Random jet with small Gaussian-rational coefficients; the linear part is invertible."""
    from fractions import Fraction

    def rnd():
        re = Fraction(int(rng.integers(-span, span + 1)), int(rng.integers(1, span + 1)))
        im = Fraction(int(rng.integers(-span, span + 1)), int(rng.integers(1, span + 1))) if complex_coeffs else 0
        return as_cq((re, im))

    while True:
        comps = []
        for i in range(n):
            comp = {}
            for d in range(1, k + 1):
                for a in _multi_indices(n, d):
                    if d == 1:
                        if tangent_to_identity:
                            comp[a] = ONE if a == _unit(n, i) else ZERO
                        else:
                            comp[a] = rnd()
                    elif rng.random() < density:
                        comp[a] = rnd()
            comps.append(comp)
        jet = Jet(n, k, comps)
        if jet.is_invertible():
            return jet

"""Exact Gaussian-rational scalars.

Coefficients are elements of sympy's ``QQ_I`` domain (pairs of gmpy2/
Python rationals).  This module holds the small conversion helpers used
by the polynomial and jet code.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from sympy import Rational as SymRational
from sympy.polys.domains import QQ_I

ZERO = QQ_I(0, 0)
ONE = QQ_I(1, 0)


def _rational(value) -> SymRational:
    if isinstance(value, str):
        return SymRational(Fraction(value.strip()))
    if isinstance(value, float):
        # floats are taken at their exact binary value
        return SymRational(Fraction(value))
    if isinstance(value, (int, Rational)):
        return SymRational(Fraction(value))
    return SymRational(value)


def cq(re=0, im=0):
    """Build an exact complex rational from (re, im) given as int, str or Fraction."""
    return QQ_I(_rational(re), _rational(im))


def as_cq(value):
    """Coerce ints, Fractions, rational strings, complex-with-rational-parts or QQ_I elements."""
    if isinstance(value, QQ_I.dtype):
        return value
    if isinstance(value, complex):
        return cq(value.real, value.imag)
    if isinstance(value, tuple) and len(value) == 2:
        return cq(*value)
    return cq(value, 0)


def to_complex(value) -> complex:
    return complex(float(value.x), float(value.y))


def parts_str(value) -> tuple[str, str]:
    """Exact real and imaginary parts as rational strings."""
    return str(value.x), str(value.y)


def is_zero(value) -> bool:
    return not value


def conj(value):
    return QQ_I(value.x, -value.y)

"""Exact arithmetic helpers: rational parsing/formatting and quadratic surds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


def as_fraction(value: Rational | str | float) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction.

    Floats are accepted only when they are exactly representable as short
    decimals (e.g. 0.5); anything else should be passed as a string.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(str(value))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_fraction(value: Rational) -> str:
    """Render as "p/q" (always with a denominator, for lossless round trips)."""
    q = as_fraction(value)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class Surd:
    """The real number ``a + b*sqrt(m)`` with rational a, b and integer m >= 0.

    Only comparisons against rationals are needed: hypothesis thresholds such
    as ``sqrt(n)`` or ``(1 + 4/sqrt(n-b)) * alpha`` are compared with exact
    measure ratios.
    """

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    m: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if self.m < 0:
            raise ValueError("negative radicand")
        r = math.isqrt(self.m)
        if r * r == self.m:
            object.__setattr__(self, "a", self.a + self.b * r)
            object.__setattr__(self, "b", Fraction(0))
            object.__setattr__(self, "m", 0)

    @classmethod
    def sqrt(cls, m: int, coeff: Rational = 1) -> "Surd":
        return cls(Fraction(0), as_fraction(coeff), m)

    @classmethod
    def of(cls, x: "Rational | Surd") -> "Surd":
        return x if isinstance(x, Surd) else cls(as_fraction(x))

    def is_rational(self) -> bool:
        return self.b == 0 or self.m == 0

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.m)

    def __add__(self, other: "Rational | Surd") -> "Surd":
        o = Surd.of(other)
        if o.is_rational():
            return Surd(self.a + o.a, self.b, self.m)
        if self.is_rational():
            return Surd(self.a + o.a, o.b, o.m)
        if o.m != self.m:
            raise ValueError("cannot add surds with different radicands")
        return Surd(self.a + o.a, self.b + o.b, self.m)

    __radd__ = __add__

    def __mul__(self, other: Rational) -> "Surd":
        q = as_fraction(other)
        return Surd(self.a * q, self.b * q, self.m)

    __rmul__ = __mul__

    def __neg__(self) -> "Surd":
        return Surd(-self.a, -self.b, self.m)

    def __sub__(self, other: "Rational | Surd") -> "Surd":
        return self + (-Surd.of(other))

    def _sign_minus(self, x: Fraction) -> int:
        """Sign of ``x - self``."""
        d = x - self.a
        if self.is_rational():
            return (d > 0) - (d < 0)
        rhs_sq = self.b * self.b * self.m
        if self.b > 0:
            # x - a  vs  b*sqrt(m) > 0
            if d <= 0:
                return -1
            dd = d * d
            return (dd > rhs_sq) - (dd < rhs_sq)
        # b < 0: compare d with a negative number
        if d >= 0:
            return 1
        dd = d * d
        return (dd < rhs_sq) - (dd > rhs_sq)

    def __str__(self) -> str:
        if self.is_rational():
            return format_fraction(self.a)
        head = "" if self.a == 0 else f"{format_fraction(self.a)}+"
        return f"{head}{format_fraction(self.b)}*sqrt({self.m})"


Threshold = Union[Fraction, Surd]


def compare(x: Rational, threshold: "Rational | Surd") -> int:
    """Return the sign of ``x - threshold`` exactly."""
    xf = as_fraction(x)
    if isinstance(threshold, Surd):
        return threshold._sign_minus(xf)
    t = as_fraction(threshold)
    return (xf > t) - (xf < t)


def ge(x: Rational, threshold: "Rational | Surd") -> bool:
    return compare(x, threshold) >= 0


def le(x: Rational, threshold: "Rational | Surd") -> bool:
    return compare(x, threshold) <= 0


def lt(x: Rational, threshold: "Rational | Surd") -> bool:
    return compare(x, threshold) < 0


def threshold_str(threshold: "Rational | Surd") -> str:
    return str(threshold) if isinstance(threshold, Surd) else format_fraction(threshold)


def sqrt_le(x: Rational, y: Rational) -> bool:
    """Exact test ``x <= sqrt(y)`` for rationals with y >= 0."""
    xf, yf = as_fraction(x), as_fraction(y)
    if xf <= 0:
        return True
    return xf * xf <= yf

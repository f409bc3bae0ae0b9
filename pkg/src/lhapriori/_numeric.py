"""Exact-rational helpers and the fixed decimal format used by every CSV writer."""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational

SIGNIFICANT_DIGITS = 6


def as_fraction(value: float | int | str | Fraction) -> Fraction:
    """Convert a threshold to an exact rational.

    Floats go through their shortest repr, so ``0.2`` becomes exactly 1/5
    rather than the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a threshold")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def format_decimal(value: Fraction | float | int, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Positional decimal with ``digits`` significant digits, never exponent form."""
    frac = as_fraction(value)
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(frac.numerator) / Decimal(frac.denominator)
        if d == 0:
            return "0"
        # pad trailing zeros so every value carries the same precision
        d = d.quantize(Decimal(1).scaleb(d.adjusted() - digits + 1))
    return format(d, "f")

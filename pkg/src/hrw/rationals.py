"""Exact rational helpers: parsing, formatting, grid rounding.

Scalars throughout the package are :class:`fractions.Fraction`; this module
holds the conversions shared by the CLI, the renderer and the approximation
kernel.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParseError


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q``, an integer, or a finite decimal, exactly.

    ``0.25`` becomes 1/4, never a binary float.
    """
    s = text.strip()
    if not s:
        raise ParseError(0, "rational number", "empty string")
    try:
        if "/" in s:
            num, den = s.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(s)  # Fraction('0.25') is exact
    except (ValueError, ZeroDivisionError):
        raise ParseError(0, "rational number", repr(text)) from None


def format_rational(q: Fraction) -> str:
    """Lowest-terms ``p/q``; bare integer when the denominator is 1."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def round_to_digits(x: Fraction, digits: int) -> Fraction:
    """Round to the nearest multiple of 10^-digits (ties to even)."""
    scale = 10**digits
    return Fraction(round(x * scale), scale)


def decimal_str(q: Fraction, digits: int = 12) -> str:
    """Fixed-point decimal rendering, for human-facing report columns."""
    sign = "-" if q < 0 else ""
    q = abs(q)
    scaled = round(q * 10**digits)
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}"

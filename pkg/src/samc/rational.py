"""Exact rational numbers: parsing and formatting helpers.

All probabilities and time values in the checking engines are carried as
``fractions.Fraction``; floating point appears only in the simulator.
"""

from __future__ import annotations

from fractions import Fraction

Rational = Fraction


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q``, integer, or decimal literals into an exact Fraction."""
    text = text.strip()
    if not text:
        raise ValueError("empty rational literal")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {text!r}") from exc


def format_rational(value: Fraction) -> str:
    """Render a Fraction as ``p/q`` (or just ``p`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"

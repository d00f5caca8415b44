"""Exact rational helpers: parsing model-file literals and printing results."""

from __future__ import annotations

from fractions import Fraction


def parse_rational(text: str) -> Fraction:
    """Parse a decimal or fraction literal exactly (``0.01`` -> 1/100).

    Accepts integers (``3``), decimals (``0.01``, ``-1.5``) and explicit
    fractions (``1/3``).
    """
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational literal: {text!r}") from exc


def format_fraction(value: Fraction) -> str:
    """Exact fraction form, e.g. ``1/5`` or ``3``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Fraction) -> str:
    """Shortest exact decimal if one exists, otherwise the fraction form.

    ``1/5`` -> ``0.2``, ``7/2`` -> ``3.5``, ``1/3`` -> ``1/3``.
    """
    den = value.denominator
    if den == 1:
        return str(value.numerator)
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return format_fraction(value)
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = text[:-digits] or "0", text[-digits:]
    return f"{sign}{whole}.{frac}" if digits else f"{sign}{whole}"

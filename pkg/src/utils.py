"""Conversions between exact rationals, mpmath values and decimal strings."""

from fractions import Fraction
from typing import Any

from mpmath.ctx_mp import MPContext

from src.errors import InvalidField


def decimal_string(value: Fraction) -> str:
    """Render a terminating rational as an exact decimal string.

    Raises InvalidField when the denominator has prime factors other than 2 and 5.
    """
    denominator = value.denominator
    twos = fives = 0
    while denominator % 2 == 0:
        denominator //= 2
        twos += 1
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    if denominator != 1:
        raise InvalidField(f"{value} has no terminating decimal expansion.")

    places = max(twos, fives)
    scaled = value.numerator * 10**places // value.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    if places == 0:
        return f"{sign}{digits}"
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def to_mpf(ctx: MPContext, value: Fraction | int) -> Any:
    """Round an exact rational once, at the context's precision."""
    value = Fraction(value)
    if value.denominator == 1:
        return ctx.mpf(value.numerator)
    return ctx.fdiv(value.numerator, value.denominator)


def render(ctx: MPContext, value: Any, digits: int) -> str:
    """Render an mpmath value with `digits` significant decimal digits."""
    return ctx.nstr(value, digits)

"""Working precision: digit budgets and per-computation mpmath contexts."""

import logging
import math
from fractions import Fraction

import mpmath
from mpmath.ctx_mp import MPContext

from src.coefficients import leading_value
from src.dto import (
    FLOOR_DIGITS,
    FieldValue,
    LevelSpec,
    PrecisionMode,
    PrecisionPolicy,
    SpinValue,
)
from src.errors import InvalidPrecision

logger = logging.getLogger("tunnelsplit.precision")


def bits_for_digits(digits: int) -> int:
    """Binary precision for a decimal digit count: ceil(digits * log2(10)) + 8."""
    return math.ceil(digits * math.log2(10)) + 8


def working_context(digits: int) -> MPContext:
    """A fresh mpmath context at the given decimal precision.

    Contexts are never shared between computations, so concurrent sweep points
    never race on precision state.
    """
    if digits < 1:
        raise InvalidPrecision(f"Precision must be positive, got {digits}.")
    ctx = mpmath.MPContext()
    ctx.prec = bits_for_digits(digits)
    return ctx


def required_digits(
    spin: SpinValue, field: FieldValue, level: LevelSpec, policy: PrecisionPolicy
) -> int:
    """Decimal digits needed to resolve the level's splitting.

    In auto mode the budget covers the decades between the predicted splitting
    and the largest unperturbed level, plus the policy's guard digits, and never
    drops below the working floor.
    """
    if policy.mode is PrecisionMode.FIXED:
        assert policy.digits is not None
        return policy.digits

    gap_digits = -floor_log10(leading_value(spin, level, field))
    energy_digits = ceil_log10(spin.value**2)
    digits = max(FLOOR_DIGITS, gap_digits + energy_digits + policy.guard_digits)

    logger.debug(
        "Digit budget for S=%s n=%d B=%s: %d (gap %d, energy %d, guard %d).",
        spin,
        level.n,
        field,
        digits,
        gap_digits,
        energy_digits,
        policy.guard_digits,
    )
    return digits


def floor_log10(value: Fraction) -> int:
    """Largest k with 10^k <= value, computed exactly."""
    if value <= 0:
        raise ValueError(f"log10 needs a positive value, got {value}.")
    k = len(str(value.numerator)) - len(str(value.denominator))
    while Fraction(10) ** k > value:
        k -= 1
    while Fraction(10) ** (k + 1) <= value:
        k += 1
    return k


def ceil_log10(value: Fraction) -> int:
    """Smallest k with 10^k >= value, computed exactly."""
    k = floor_log10(value)
    return k if Fraction(10) ** k == value else k + 1

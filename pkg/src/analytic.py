"""Closed-form splittings rendered as gap results."""

import logging
from fractions import Fraction

from src.coefficients import (
    asymptotic_fractional_error,
    correction_coefficient,
    corrected_value,
    leading_value,
)
from src.dto import (
    Anisotropy,
    FieldValue,
    GapResult,
    LevelSpec,
    Method,
    PrecisionPolicy,
    SpinValue,
)
from src.precision import required_digits, working_context
from src.utils import render, to_mpf

logger = logging.getLogger("tunnelsplit.analytic")

# Beyond this the first correction no longer describes the splitting
CORRECTION_REGIME_LIMIT = Fraction(1, 2)


def axis_level(spin: SpinValue, level: LevelSpec, anisotropy: Anisotropy) -> LevelSpec:
    """Easy-axis level carrying the same gap; easy-plane levels are counted from the top."""
    if anisotropy is Anisotropy.EASY_PLANE:
        return level.mirrored(spin)
    return level


def leading_gap(
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
) -> GapResult:
    """Leading-order splitting."""
    policy = policy or PrecisionPolicy()
    target = axis_level(spin, level, anisotropy)
    value = leading_value(spin, target, field)

    diagnostics = {"exact_rational": str(value)}
    if not target.is_half_sigma:
        diagnostics["fractional_error"] = str(
            correction_coefficient(spin, target) * field.magnitude**2
        )
    if target.n == 0:
        diagnostics["asymptotic_fractional_error"] = str(
            asymptotic_fractional_error(spin, field)
        )
    return _gap_result(
        spin, level, field, Method.LEADING, value, anisotropy, policy, diagnostics
    )


def corrected_gap(
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
) -> GapResult:
    """Leading splitting with its first B^2 correction."""
    policy = policy or PrecisionPolicy()
    target = axis_level(spin, level, anisotropy)
    correction = correction_coefficient(spin, target) * field.magnitude**2
    value = corrected_value(spin, target, field)

    exceeded = correction >= CORRECTION_REGIME_LIMIT
    if exceeded:
        logger.warning(
            "Correction %s at S=%s n=%d B=%s is outside the first-correction regime.",
            correction,
            spin,
            target.n,
            field,
        )
    diagnostics = {
        "exact_rational": str(value),
        "correction": str(correction),
        "correction_regime_exceeded": str(exceeded).lower(),
    }
    if value < 0:
        # Correction larger than the leading term; the splitting is reported as zero
        diagnostics["clamped_to_zero"] = "true"
        value = Fraction(0)
    return _gap_result(
        spin, level, field, Method.CORRECTED, value, anisotropy, policy, diagnostics
    )


def _gap_result(
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    method: Method,
    value: Fraction,
    anisotropy: Anisotropy,
    policy: PrecisionPolicy,
    diagnostics: dict[str, str],
) -> GapResult:
    digits = required_digits(spin, field, axis_level(spin, level, anisotropy), policy)
    ctx = working_context(digits)
    return GapResult(
        spin=spin,
        level=level,
        field=field,
        method=method,
        value=render(ctx, to_mpf(ctx, value), digits),
        digits_used=digits,
        anisotropy=anisotropy,
        diagnostics=diagnostics,
    )

"""Exact rational coefficients of the closed-form splittings.

Everything here is computed with `fractions.Fraction`, so identities between
the coefficients can be checked with equality rather than tolerances. With
sigma = S - n the leading splitting is

    (2S-n)! / (2^(2S-2n-1) n! ((2S-2n-1)!)^2) * B^(2S-2n),

its first correction multiplies it by (1 - gamma B^2), and the correction splits
into three parts xi1 + xi2 + xi3 = -gamma (coefficients of B^2): the level shift
inside the amplitude denominators, the second-order level repulsion, and the
extra to-and-fro excursions along the tunnelling path.
"""

from fractions import Fraction
from math import factorial

from pydantic import BaseModel, ConfigDict, field_serializer

from src.dto import FieldValue, LevelSpec, SpinValue, unperturbed_energy
from src.errors import InvalidField, InvalidLevel, UnsupportedLevel


class XiIdentityReport(BaseModel):
    """Outcome of the exact check xi1 + xi2 + xi3 == -gamma."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    holds: bool
    lhs: Fraction
    rhs: Fraction

    @field_serializer("lhs", "rhs")
    def serialize_fraction(self, value: Fraction) -> str:
        return str(value)


def harmonic_number(k: int) -> Fraction:
    """H_k = 1 + 1/2 + ... + 1/k, with H_0 = 0."""
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def coupling_squared(spin: SpinValue, m: Fraction) -> Fraction:
    """Squared S_x matrix element <m-1|S_x|m>^2 = (S(S+1) - m(m-1)) / 4."""
    s = spin.value
    return (s * (s + 1) - m * (m - 1)) / 4


def leading_coefficient(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Coefficient of |B|^(2 sigma) in the leading-order splitting."""
    n = level.n
    power = level.sigma_twice
    return Fraction(
        factorial(spin.twice_s - n),
        2 ** (power - 1) * factorial(n) * factorial(power - 1) ** 2,
    )


def de_form_coefficient(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Twice the tunnelling amplitude, 2 (1/2)^(2 sigma) (sigma+S)! / ((S-sigma)! ((2 sigma-1)!)^2).

    The factorial of 2 sigma - 1 is squared; with that square it coincides with
    `leading_coefficient` for every valid level.
    """
    power = level.sigma_twice
    upper = (spin.twice_s + power) // 2
    lower = (spin.twice_s - power) // 2
    return 2 * Fraction(1, 2**power) * Fraction(
        factorial(upper), factorial(lower) * factorial(power - 1) ** 2
    )


def leading_value(spin: SpinValue, level: LevelSpec, field: FieldValue) -> Fraction:
    """Leading-order splitting, exact in B."""
    _require_field(field)
    return leading_coefficient(spin, level) * field.magnitude**level.sigma_twice


def gamma(spin: SpinValue, level: LevelSpec) -> Fraction:
    """First-correction coefficient (2S+1)^2 (sigma+1) / (2 (2 sigma-1)^2 (2 sigma+1)^2).

    Raises:
        InvalidLevel: for sigma = 1/2, whose correction has its own closed form.
    """
    if level.is_half_sigma:
        raise InvalidLevel(
            "gamma is undefined for sigma = 1/2; use correction_coefficient."
        )
    two_sigma = level.sigma_twice
    return Fraction(
        (spin.twice_s + 1) ** 2 * (two_sigma + 2),
        4 * (two_sigma - 1) ** 2 * (two_sigma + 1) ** 2,
    )


def correction_coefficient(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Coefficient c of -B^2 in the correction factor (1 - c B^2), for every level."""
    if level.is_half_sigma:
        # (S + 3/2)(S - 1/2) / 16
        return Fraction((spin.twice_s + 3) * (spin.twice_s - 1), 64)
    return gamma(spin, level)


def corrected_value(spin: SpinValue, level: LevelSpec, field: FieldValue) -> Fraction:
    """Leading splitting times its first correction, exact in B."""
    correction = correction_coefficient(spin, level) * field.magnitude**2
    return leading_value(spin, level, field) * (1 - correction)


def ground_gap(spin: SpinValue, field: FieldValue) -> Fraction:
    """Compact ground-doublet form S^2 / (2^(2S-3) (2S)!) B^(2S) [1 - (S+1) B^2 / (2 (2S-1)^2)].

    Raises:
        InvalidLevel: for S = 1/2, whose only gap is the sigma = 1/2 one.
    """
    if spin.twice_s < 2:
        raise InvalidLevel("The compact ground form needs S > 1/2.")
    _require_field(field)
    s = spin.value
    b = field.magnitude
    prefactor = s**2 * Fraction(2) ** (3 - spin.twice_s) / factorial(spin.twice_s)
    correction = (s + 1) / (2 * (2 * s - 1) ** 2)
    return prefactor * b**spin.twice_s * (1 - correction * b**2)


def fractional_error(spin: SpinValue, level: LevelSpec, field: FieldValue) -> Fraction:
    """Relative overstatement of the leading term, to order B^2."""
    return correction_coefficient(spin, level) * field.magnitude**2


def asymptotic_fractional_error(spin: SpinValue, field: FieldValue) -> Fraction:
    """Large-S limit B^2 / (8S) of the ground-doublet fractional error."""
    return field.magnitude**2 / (8 * spin.value)


def xi1(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Level-shift part of the correction (coefficient of B^2)."""
    _require_full_sigma(level)
    s = spin.value
    n = level.n
    two_sigma = level.sigma_twice
    bracket = n * n - 2 * s * n + s * (2 * s + 1)
    denominator = two_sigma * (two_sigma**2 - 1)
    return -bracket / denominator * harmonic_number(two_sigma - 1)


def xi2(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Second-order level-repulsion part of the correction (coefficient of B^2)."""
    _require_full_sigma(level)
    n = level.n
    two_s = spin.twice_s
    two_sigma = level.sigma_twice
    inner = Fraction((n + 1) * (two_s - n), (two_sigma - 1) ** 2) + Fraction(
        n * (two_s - n + 1), (two_sigma + 1) ** 2
    )
    return -inner / 4


def xi3_ground(spin: SpinValue) -> Fraction:
    """Excursion part of the ground-doublet correction (coefficient of B^2).

    Sums V^2 / (alpha alpha') over every pair of adjacent intermediate points of
    the path from S to -S, with zeroth-order denominators alpha_m = eps_S - eps_m.
    """
    sigma = spin.value
    top = unperturbed_energy(sigma)
    total = Fraction(0)
    for k in range(2, spin.twice_s):
        lower = sigma - k
        upper = lower + 1
        alpha_lower = top - unperturbed_energy(lower)
        alpha_upper = top - unperturbed_energy(upper)
        total += coupling_squared(spin, upper) / (alpha_lower * alpha_upper)
    return total


def xi3(spin: SpinValue, level: LevelSpec) -> Fraction:
    """Excursion part of the correction; only the ground doublet is supported."""
    if level.n != 0:
        raise UnsupportedLevel("The excursion correction is defined for n = 0 only.")
    return xi3_ground(spin)


def xi_identity_report(spin: SpinValue) -> XiIdentityReport:
    """Check exactly that the three correction parts add up to -gamma at n = 0."""
    if spin.twice_s < 2:
        raise InvalidLevel("The correction identity needs S >= 1.")
    level = LevelSpec.for_spin(spin, 0)
    lhs = xi1(spin, level) + xi2(spin, level) + xi3_ground(spin)
    rhs = -gamma(spin, level)
    return XiIdentityReport(holds=lhs == rhs, lhs=lhs, rhs=rhs)


def _require_full_sigma(level: LevelSpec) -> None:
    if level.is_half_sigma:
        raise InvalidLevel("Correction parts are defined for sigma >= 1 only.")


def _require_field(field: FieldValue) -> None:
    if field.is_zero:
        raise InvalidField("The splitting vanishes at zero field; use B != 0.")

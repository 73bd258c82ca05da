from fractions import Fraction

import mpmath
import pytest

from src.dto import (
    FieldValue,
    LevelSpec,
    PrecisionPolicy,
    SpinValue,
    parse_precision,
)
from src.errors import InvalidPrecision
from src.precision import (
    bits_for_digits,
    ceil_log10,
    floor_log10,
    required_digits,
    working_context,
)


def test_bits_for_digits() -> None:
    assert bits_for_digits(40) == 141
    assert bits_for_digits(1) == 12


def test_working_context_is_fresh() -> None:
    first = working_context(50)
    second = working_context(300)

    assert isinstance(first, mpmath.MPContext)
    assert first is not second
    assert first.prec == bits_for_digits(50)
    assert second.prec == bits_for_digits(300)
    # The global context is left alone
    assert mpmath.mp.prec == 53


def test_working_context_rejects_non_positive_digits() -> None:
    with pytest.raises(InvalidPrecision):
        working_context(0)


@pytest.mark.parametrize(
    ("twice_s", "field", "expected"),
    [(20, "1", 44), (100, "1", 208), (2, "0.5", 40)],
)
def test_required_digits_auto(twice_s: int, field: str, expected: int) -> None:
    spin = SpinValue(twice_s=twice_s)
    digits = required_digits(
        spin, FieldValue.of(field), LevelSpec.for_spin(spin, 0), PrecisionPolicy()
    )
    assert digits == expected


def test_required_digits_grows_with_guard() -> None:
    spin = SpinValue(twice_s=20)
    level = LevelSpec.for_spin(spin, 0)
    field = FieldValue.of("1")
    assert required_digits(spin, field, level, parse_precision("auto", 30)) == 54


def test_required_digits_shrinks_as_the_field_grows() -> None:
    spin = SpinValue(twice_s=8)
    level = LevelSpec.for_spin(spin, 0)
    fields = ["0.001", "0.002", "0.005", "0.01", "0.02", "0.05", "0.1", "0.2", "0.5", "1"]
    digits = [
        required_digits(spin, FieldValue.of(b), level, PrecisionPolicy()) for b in fields
    ]
    assert all(a >= b for a, b in zip(digits, digits[1:])), digits


def test_required_digits_grows_with_spin() -> None:
    field = FieldValue.of("1")
    digits = []
    for twice_s in range(1, 60):
        spin = SpinValue(twice_s=twice_s)
        level = LevelSpec.for_spin(spin, 0)
        digits.append(required_digits(spin, field, level, PrecisionPolicy()))
    assert all(a <= b for a, b in zip(digits, digits[1:])), digits
    assert digits[0] == 40
    assert digits[-1] > digits[0]


def test_required_digits_fixed() -> None:
    spin = SpinValue(twice_s=100)
    level = LevelSpec.for_spin(spin, 0)
    policy = parse_precision("digits:240")
    assert required_digits(spin, FieldValue.of("1"), level, policy) == 240


@pytest.mark.parametrize(
    ("value", "floor", "ceil"),
    [
        (Fraction(100), 2, 2),
        (Fraction(101), 2, 3),
        (Fraction(1, 4), -1, 0),
        (Fraction(1, 1000), -3, -3),
        (Fraction(9, 10), -1, 0),
    ],
)
def test_exact_log10(value: Fraction, floor: int, ceil: int) -> None:
    assert floor_log10(value) == floor
    assert ceil_log10(value) == ceil

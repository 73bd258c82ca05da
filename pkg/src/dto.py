"""Value types shared by the solvers and the command-line harness."""

import re
from decimal import Decimal, InvalidOperation
from enum import StrEnum
from fractions import Fraction
from pathlib import Path
from typing import Literal, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from src.errors import InvalidField, InvalidLevel, InvalidPrecision, InvalidSpin
from src.utils import decimal_string

# Working precision never drops below this many decimal digits
FLOOR_DIGITS = 40

_SPIN_PATTERN = re.compile(r"^(?P<whole>\d+)(?:/(?P<den>\d+)|\.(?P<frac>\d+))?$")


class Anisotropy(StrEnum):
    """Sign of the S_z² anisotropy term."""

    EASY_AXIS = "easy-axis"
    EASY_PLANE = "easy-plane"

    @property
    def sign(self) -> int:
        """Sign multiplying S_z² in the Hamiltonian."""
        return -1 if self is Anisotropy.EASY_AXIS else 1


class Method(StrEnum):
    """The four ways a splitting can be computed."""

    EXACT = "exact"
    LEADING = "leading"
    CORRECTED = "corrected"
    BW = "bw"


class Parity(StrEnum):
    """Block label under the m -> -m reflection."""

    FULL = "full"
    EVEN = "even"
    ODD = "odd"


class PrecisionMode(StrEnum):
    """How the working precision is chosen."""

    AUTO = "auto"
    FIXED = "fixed"


class Spacing(StrEnum):
    """Spacing of the field grid in a sweep."""

    LOG = "log"
    LINEAR = "linear"


class OutputFormat(StrEnum):
    """Serialization of sweep tables."""

    CSV = "csv"
    JSON = "json"


class SpinValue(BaseModel):
    """A positive half-integer spin, stored exactly as twice its value."""

    model_config = ConfigDict(frozen=True)
    twice_s: int = Field(..., ge=1, description="Twice the spin, 2S.")

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_s, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice_s % 2 == 0

    @property
    def dim(self) -> int:
        """Dimension of the spin multiplet, 2S+1."""
        return self.twice_s + 1

    @property
    def doublet_count(self) -> int:
        """Number of doublets: S for integer spin, S+1/2 otherwise."""
        return (self.twice_s + 1) // 2

    def render(self) -> str:
        """Canonical text form, `3` or `5/2`."""
        if self.is_integer:
            return str(self.twice_s // 2)
        return f"{self.twice_s}/2"

    def __str__(self) -> str:
        """Same as render()."""
        return self.render()


class FieldValue(BaseModel):
    """Dimensionless transverse field B, stored as an exact terminating decimal."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    exact: Fraction = Field(..., description="Exact field value.")

    @field_validator("exact")
    def validate_exact(cls, value: Fraction) -> Fraction:
        """Only terminating decimals are representable."""
        decimal_string(value)
        return value

    @field_serializer("exact")
    def serialize_exact(self, exact: Fraction) -> str:
        return decimal_string(exact)

    @classmethod
    def of(cls, value: Fraction | int | str) -> Self:
        """Build a field from a rational, integer or decimal text."""
        if isinstance(value, str):
            return parse_field(value)  # type: ignore[return-value]
        return cls(exact=Fraction(value))

    @property
    def magnitude(self) -> Fraction:
        return abs(self.exact)

    @property
    def is_zero(self) -> bool:
        return self.exact == 0

    def negated(self) -> "FieldValue":
        return FieldValue(exact=-self.exact)

    def render(self) -> str:
        return decimal_string(self.exact)

    def __str__(self) -> str:
        """Same as render()."""
        return self.render()


class LevelSpec(BaseModel):
    """Doublet index n, counted from the ground doublet, with sigma = S - n."""

    model_config = ConfigDict(frozen=True)
    n: int = Field(..., ge=0)
    sigma_twice: int = Field(..., ge=1, description="Twice sigma, 2S - 2n.")

    @classmethod
    def for_spin(cls, spin: SpinValue, n: int) -> Self:
        """Validate n against the spin and derive sigma."""
        if n < 0 or 2 * n > spin.twice_s - 1:
            raise InvalidLevel(
                f"Level {n} is out of range for S={spin}; "
                f"valid levels are 0..{spin.doublet_count - 1}."
            )
        return cls(n=n, sigma_twice=spin.twice_s - 2 * n)

    @property
    def sigma(self) -> Fraction:
        return Fraction(self.sigma_twice, 2)

    @property
    def is_half_sigma(self) -> bool:
        """True for the highest gap of a half-integer spin (sigma = 1/2)."""
        return self.sigma_twice == 1

    def mirrored(self, spin: SpinValue) -> "LevelSpec":
        """The level with the same gap once the spectrum is inverted."""
        return LevelSpec.for_spin(spin, spin.doublet_count - 1 - self.n)


def unperturbed_energy(sigma: Fraction) -> Fraction:
    """Easy-axis level with S_z projection sigma at zero field."""
    return -sigma * sigma


class PrecisionPolicy(BaseModel):
    """Working-precision policy in decimal digits."""

    model_config = ConfigDict(frozen=True)
    mode: PrecisionMode = PrecisionMode.AUTO
    digits: int | None = Field(None, ge=FLOOR_DIGITS)
    guard_digits: int = Field(20, ge=1)

    @model_validator(mode="after")
    def validate_digits(self) -> Self:
        if self.mode is PrecisionMode.FIXED and self.digits is None:
            raise ValueError("Fixed precision needs a digit count.")
        return self

    def render(self) -> str:
        if self.mode is PrecisionMode.AUTO:
            return "auto"
        return f"digits:{self.digits}"


class GapResult(BaseModel):
    """One computed splitting."""

    model_config = ConfigDict(frozen=True)
    spin: SpinValue
    level: LevelSpec
    field: FieldValue
    method: Method
    value: str = Field(..., description="Splitting as a decimal string.")
    digits_used: int = Field(..., ge=1)
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS
    diagnostics: dict[str, str] = Field(default_factory=dict)

    @field_validator("value")
    def validate_value(cls, value: str) -> str:
        """Splittings are non-negative."""
        if value.strip().startswith("-"):
            raise ValueError(f"Splitting must be non-negative, got {value}.")
        return value


class SweepConfig(BaseModel):
    """A field sweep over one spin and a set of levels."""

    model_config = ConfigDict(frozen=True)
    spin: SpinValue
    levels: list[int] | None = Field(None, description="Doublet indices; None means all.")
    field_min: FieldValue
    field_max: FieldValue
    points: int = Field(..., ge=2)
    spacing: Spacing = Spacing.LOG
    methods: list[Method] = Field(..., min_length=1)
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS
    policy: PrecisionPolicy = Field(default_factory=PrecisionPolicy)
    output_format: OutputFormat = OutputFormat.CSV
    out: Path | None = None
    workers: int = Field(4, ge=1)
    bw_truncation: Literal[2, 4] = 2

    @model_validator(mode="after")
    def validate_range(self) -> Self:
        """The field range must be positive and increasing."""
        if self.field_min.exact <= 0:
            raise ValueError("field_min must be positive.")
        if self.field_min.exact >= self.field_max.exact:
            raise ValueError("field_min must be smaller than field_max.")
        return self

    def level_specs(self) -> list[LevelSpec]:
        indices = (
            range(self.spin.doublet_count) if self.levels is None else self.levels
        )
        return [LevelSpec.for_spin(self.spin, n) for n in indices]

    def echo(self) -> dict[str, str]:
        """Flag-named echo of the configuration for report metadata."""
        return {
            "spin": self.spin.render(),
            "level": "all"
            if self.levels is None
            else ",".join(str(n) for n in self.levels),
            "field-min": self.field_min.render(),
            "field-max": self.field_max.render(),
            "points": str(self.points),
            "spacing": self.spacing.value,
            "method": ",".join(m.value for m in self.methods),
            "anisotropy": self.anisotropy.value,
            "precision": self.policy.render(),
            "bw-truncation": str(self.bw_truncation),
        }


class ComparisonRow(BaseModel):
    """All requested methods evaluated at one (level, field) point."""

    spin: str
    n: int
    B: str
    gaps: dict[str, str | None]
    rel_dev_vs_exact: dict[str, str | None] | None = None
    digits_used: int
    status: dict[str, str]
    elapsed_ms: float

    @model_validator(mode="after")
    def validate_deviations(self) -> Self:
        if self.rel_dev_vs_exact is not None and Method.EXACT not in self.gaps:
            raise ValueError("Relative deviations need the exact method.")
        return self


class ReportMeta(BaseModel):
    """Provenance written at the top of JSON reports."""

    model_config = ConfigDict(populate_by_name=True)
    tool: str
    version: str
    config_echo: dict[str, str] = Field(..., alias="config-echo")


class SweepReport(BaseModel):
    """A sweep table with its provenance."""

    meta: ReportMeta
    rows: list[ComparisonRow]


def parse_spin(text: str) -> SpinValue:
    """Parse `3`, `5/2` or `2.5` into an exact spin."""
    stripped = text.strip()
    if stripped.startswith("-"):
        raise InvalidSpin(f"Spin must be positive, got '{text}'.")

    match = _SPIN_PATTERN.match(stripped)
    if match is None:
        raise InvalidSpin(f"Malformed spin '{text}'. Use forms like 3, 5/2 or 2.5.")

    if match["den"] is not None:
        denominator = int(match["den"])
        if denominator == 0:
            raise InvalidSpin(f"Malformed spin '{text}': zero denominator.")
        value = Fraction(int(match["whole"]), denominator)
    elif match["frac"] is not None:
        value = Fraction(f"{match['whole']}.{match['frac']}")
    else:
        value = Fraction(int(match["whole"]))

    twice = 2 * value
    if twice.denominator != 1:
        raise InvalidSpin(f"Spin '{text}' is not a half-integer.")
    if twice == 0:
        raise InvalidSpin("Spin 0 has a single level and no splitting.")
    return SpinValue(twice_s=int(twice))


def parse_field(text: str) -> FieldValue:
    """Parse a decimal string into an exact field value."""
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise InvalidField(f"Malformed field '{text}'.") from None
    if not value.is_finite():
        raise InvalidField(f"Field must be finite, got '{text}'.")
    return FieldValue(exact=Fraction(value))


def parse_precision(text: str, guard_digits: int = 20) -> PrecisionPolicy:
    """Parse `auto` or `digits:N`."""
    normalized = text.strip().lower()
    if normalized == "auto":
        return PrecisionPolicy(mode=PrecisionMode.AUTO, guard_digits=guard_digits)

    prefix, _, count = normalized.partition(":")
    if prefix != "digits" or not count.isdigit():
        raise InvalidPrecision(f"Malformed precision '{text}'. Use auto or digits:N.")
    digits = int(count)
    if digits < FLOOR_DIGITS:
        raise InvalidPrecision(
            f"Precision must be at least {FLOOR_DIGITS} digits, got {digits}."
        )
    return PrecisionPolicy(
        mode=PrecisionMode.FIXED, digits=digits, guard_digits=guard_digits
    )

"""Certified eigenvalues of tridiagonal systems and the gaps between doublet members.

Eigenvalues are enclosed by bisection on Sturm counts: the number of negative
pivots in the LDL^T factorization of T - xI equals the number of eigenvalues
below x. Each enclosure is self-contained and deterministic, so a splitting is
the difference of two certified intervals taken from opposite parity blocks.
"""

import logging
from fractions import Fraction
from typing import Any

from mpmath.ctx_mp import MPContext
from pydantic import BaseModel, ConfigDict, Field

from src.analytic import axis_level
from src.coefficients import leading_value
from src.dto import (
    FLOOR_DIGITS,
    Anisotropy,
    FieldValue,
    GapResult,
    LevelSpec,
    Method,
    Parity,
    PrecisionMode,
    PrecisionPolicy,
    SpinValue,
)
from src.errors import (
    DoubletBroken,
    InvalidField,
    InvalidPrecision,
    OutOfRange,
    PrecisionExhausted,
)
from src.hamiltonian import TridiagonalSystem, build_parity_blocks
from src.precision import required_digits, working_context
from src.utils import render, to_mpf

logger = logging.getLogger("tunnelsplit.exact_spectrum")

# A splitting is reported only when its enclosure is this tight, relatively
CERTIFIED_RELATIVE_WIDTH = "1e-10"


class Enclosure(BaseModel):
    """Bisection interval around one eigenvalue."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    lower: Any
    upper: Any
    steps: int = Field(..., ge=0)

    @property
    def midpoint(self) -> Any:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> Any:
        return self.upper - self.lower


class EigenvalueSet(BaseModel):
    """Sorted eigenvalues with their parity labels and the widest enclosure."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    values: tuple[Any, ...]
    parity_labels: tuple[Parity, ...]
    digits: int
    max_interval_width: Any

    def __len__(self) -> int:
        """Number of eigenvalues."""
        return len(self.values)


class DoubletMeasurement(BaseModel):
    """Certified splitting between one eigenvalue of each parity block."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    gap: Any
    uncertainty: Any
    even: Enclosure
    odd: Enclosure


class DoubletRow(BaseModel):
    """One line of the doublet pairing report."""

    n: int
    even: str
    odd: str
    gap: str
    adjacent: bool


class SpectrumReport(BaseModel):
    """Merged parity-labelled spectrum and its doublet pairing."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    spin: SpinValue
    field: FieldValue
    anisotropy: Anisotropy
    digits: int
    eigenvalues: EigenvalueSet
    doublets: list[DoubletRow]

    def rendered_values(self) -> list[str]:
        ctx = working_context(self.digits)
        return [render(ctx, value, self.digits) for value in self.eigenvalues.values]


def gershgorin_bounds(system: TridiagonalSystem) -> tuple[Any, Any]:
    """Interval containing every eigenvalue of the system."""
    ctx = system.context
    lower = upper = None
    for i, center in enumerate(system.diag):
        radius = ctx.zero
        if i > 0:
            radius += abs(system.offdiag[i - 1])
        if i < system.dim - 1:
            radius += abs(system.offdiag[i])
        low, high = center - radius, center + radius
        lower = low if lower is None else min(lower, low)
        upper = high if upper is None else max(upper, high)
    return lower, upper


def sturm_count(system: TridiagonalSystem, x: Any) -> int:
    """Number of eigenvalues strictly below x."""
    ctx = system.context
    return _count_below(system, _as_mpf(ctx, x), _zero_pivot(system))


def bracket_eigenvalue(
    system: TridiagonalSystem, k: int, target_width: Any
) -> Enclosure:
    """Enclose the k-th smallest eigenvalue (0-based) to width <= target_width.

    Raises:
        OutOfRange: if k is not an eigenvalue index of the system.
        PrecisionExhausted: if the width is below what the digits can resolve.
    """
    if not 0 <= k < system.dim:
        raise OutOfRange(f"Eigenvalue index {k} outside 0..{system.dim - 1}.")
    ctx = system.context
    width = _as_mpf(ctx, target_width)
    _check_width(system, width)

    lower, upper = gershgorin_bounds(system)
    lower -= 1
    upper += 1
    tiny = _zero_pivot(system)
    steps = 0
    # count(lower) <= k < count(upper)
    while upper - lower > width:
        middle = (lower + upper) / 2
        if _count_below(system, middle, tiny) > k:
            upper = middle
        else:
            lower = middle
        steps += 1
    return Enclosure(lower=lower, upper=upper, steps=steps)


def eigenvalues(system: TridiagonalSystem, target_width: Any) -> EigenvalueSet:
    """All eigenvalues of the system, each certified to target_width."""
    enclosures = [
        bracket_eigenvalue(system, k, target_width) for k in range(system.dim)
    ]
    logger.debug(
        "Bisected %d %s eigenvalues in %d steps.",
        system.dim,
        system.parity_label,
        sum(e.steps for e in enclosures),
    )
    return EigenvalueSet(
        values=tuple(e.midpoint for e in enclosures),
        parity_labels=(system.parity_label,) * system.dim,
        digits=system.digits,
        max_interval_width=max(e.width for e in enclosures),
    )


def merge_spectra(*sets: EigenvalueSet) -> EigenvalueSet:
    """Merge blockwise eigenvalue sets into one ascending, labelled set."""
    pairs = sorted(
        (
            (value, label)
            for eigen_set in sets
            for value, label in zip(eigen_set.values, eigen_set.parity_labels)
        ),
        key=lambda pair: pair[0],
    )
    return EigenvalueSet(
        values=tuple(value for value, _ in pairs),
        parity_labels=tuple(label for _, label in pairs),
        digits=min(s.digits for s in sets),
        max_interval_width=max(s.max_interval_width for s in sets),
    )


def doublet_indices(
    spin: SpinValue, level: LevelSpec, kind: Anisotropy
) -> tuple[int, int]:
    """Ascending indices of the doublet's members in the even and odd blocks.

    Easy-plane integer spins keep the singlet |0> lowest in the even block, so
    the even member is shifted up by one.
    """
    if kind is Anisotropy.EASY_PLANE and spin.is_integer:
        return level.n + 1, level.n
    return level.n, level.n


def measure_doublet(
    even: TridiagonalSystem,
    odd: TridiagonalSystem,
    k_even: int,
    k_odd: int,
    target_width: Any,
) -> DoubletMeasurement:
    """Certified difference of two eigenvalues from opposite blocks.

    Raises:
        DoubletBroken: if another eigenvalue lies between the two members.
    """
    ctx = even.context
    width = _as_mpf(ctx, target_width)
    first = bracket_eigenvalue(even, k_even, width)
    second = bracket_eigenvalue(odd, k_odd, width)

    low = min(first.lower, second.lower)
    high = max(first.upper, second.upper)
    even_tiny, odd_tiny = _zero_pivot(even), _zero_pivot(odd)
    members = (
        _count_below(even, high, even_tiny) + _count_below(odd, high, odd_tiny)
    ) - (_count_below(even, low, even_tiny) + _count_below(odd, low, odd_tiny))
    if members != 2:
        raise DoubletBroken(
            f"Doublet members {k_even} (even) and {k_odd} (odd) are not adjacent: "
            f"{members} eigenvalues lie in their span."
        )
    return DoubletMeasurement(
        gap=abs(first.midpoint - second.midpoint),
        uncertainty=first.width + second.width,
        even=first,
        odd=second,
    )


def exact_gap(
    spin: SpinValue,
    field: FieldValue,
    level: LevelSpec,
    kind: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
) -> GapResult:
    """Splitting of a doublet from the parity-resolved exact spectrum."""
    policy = policy or PrecisionPolicy()
    if field.is_zero:
        raise InvalidField("The splitting vanishes at zero field; use B != 0.")
    target = axis_level(spin, level, kind)
    digits = required_digits(spin, field, target, policy)
    even, odd = build_parity_blocks(spin, field, kind, digits)
    ctx = even.context
    k_even, k_odd = doublet_indices(spin, level, kind)

    estimate = to_mpf(ctx, leading_value(spin, target, field))
    fine_width = max(_precision_floor(even), _precision_floor(odd)) * 10
    width = max(estimate * ctx.mpf(10) ** (4 - policy.guard_digits), fine_width)

    measurement = measure_doublet(even, odd, k_even, k_odd, width)
    if not _certified(ctx, measurement) and width > fine_width:
        logger.info(
            "Enclosure too wide for S=%s n=%d B=%s; refining to the precision floor.",
            spin,
            level.n,
            field,
        )
        measurement = measure_doublet(even, odd, k_even, k_odd, fine_width)
    if not _certified(ctx, measurement):
        raise PrecisionExhausted(
            f"Cannot certify the splitting at S={spin} n={level.n} B={field} "
            f"with {digits} digits; raise the precision."
        )

    relative_width = measurement.uncertainty / measurement.gap
    logger.debug(
        "Exact gap S=%s n=%d B=%s: relative width %s after %d + %d steps.",
        spin,
        level.n,
        field,
        ctx.nstr(relative_width, 3),
        measurement.even.steps,
        measurement.odd.steps,
    )
    return GapResult(
        spin=spin,
        level=level,
        field=field,
        method=Method.EXACT,
        value=render(ctx, measurement.gap, digits),
        digits_used=digits,
        anisotropy=kind,
        diagnostics={
            "bisection_steps": str(measurement.even.steps + measurement.odd.steps),
            "certified_rel_width": ctx.nstr(relative_width, 3),
            "block_dims": f"{even.dim},{odd.dim}",
        },
    )


def spectrum(
    spin: SpinValue,
    field: FieldValue,
    kind: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
) -> SpectrumReport:
    """Merged parity-labelled spectrum with every doublet's pairing."""
    policy = policy or PrecisionPolicy()
    ground = LevelSpec.for_spin(spin, 0)
    if field.is_zero:
        digits = policy.digits if policy.mode is PrecisionMode.FIXED else None
        digits = digits or FLOOR_DIGITS
    else:
        # The ground splitting is the smallest one and sets the budget
        digits = required_digits(spin, field, ground, policy)

    even, odd = build_parity_blocks(spin, field, kind, digits)
    ctx = even.context
    # Every level to the precision floor, so whole spectra compare at 10^(10 - digits)
    width = max(_precision_floor(even), _precision_floor(odd)) * 10

    even_set = eigenvalues(even, width)
    odd_set = eigenvalues(odd, width)
    merged = merge_spectra(even_set, odd_set)

    doublets = []
    for n in range(spin.doublet_count):
        level = LevelSpec.for_spin(spin, n)
        k_even, k_odd = doublet_indices(spin, level, kind)
        even_value = even_set.values[k_even]
        odd_value = odd_set.values[k_odd]
        low, high = sorted((even_value, odd_value))
        # Adjacent when nothing else falls strictly between the two members
        between = sum(1 for value in merged.values if low < value < high)
        doublets.append(
            DoubletRow(
                n=n,
                even=render(ctx, even_value, digits),
                odd=render(ctx, odd_value, digits),
                gap=render(ctx, abs(even_value - odd_value), digits),
                adjacent=between == 0,
            )
        )
    return SpectrumReport(
        spin=spin,
        field=field,
        anisotropy=kind,
        digits=digits,
        eigenvalues=merged,
        doublets=doublets,
    )


def _count_below(system: TridiagonalSystem, x: Any, tiny: Any) -> int:
    count = 0
    pivot = None
    for i, center in enumerate(system.diag):
        if pivot is None:
            pivot = center - x
        else:
            pivot = (center - x) - system.offdiag_squared[i - 1] / pivot
        if pivot == 0:
            pivot = -tiny
        if pivot < 0:
            count += 1
    return count


def _scale(system: TridiagonalSystem) -> Any:
    lower, upper = gershgorin_bounds(system)
    return max(abs(lower), abs(upper), system.context.one)


def _zero_pivot(system: TridiagonalSystem) -> Any:
    return system.context.mpf(10) ** (-system.digits) * _scale(system)


def _precision_floor(system: TridiagonalSystem) -> Any:
    return system.context.mpf(10) ** (2 - system.digits) * _scale(system)


def _check_width(system: TridiagonalSystem, width: Any) -> None:
    if width <= 0:
        raise InvalidPrecision("Target width must be positive.")
    if width < _precision_floor(system):
        raise PrecisionExhausted(
            f"Target width {system.context.nstr(width, 5)} is below what "
            f"{system.digits} digits can resolve."
        )


def _certified(ctx: MPContext, measurement: DoubletMeasurement) -> bool:
    if measurement.gap == 0:
        return False
    return bool(
        measurement.uncertainty <= measurement.gap * ctx.mpf(CERTIFIED_RELATIVE_WIDTH)
    )


def _as_mpf(ctx: MPContext, value: Any) -> Any:
    if isinstance(value, Fraction | int):
        return to_mpf(ctx, value)
    return ctx.convert(value)

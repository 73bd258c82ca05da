"""This module contains the logic to evaluate sweeps and fit power laws.

The CLI doesn't concern itself with how the sweep points are scheduled. Instead, it
delegates to the runner, which evaluates every (level, field) point in a worker
thread and assembles the rows in a fixed order: level-major, field ascending.
"""

import asyncio
import logging
import time
from collections.abc import Iterable, Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel

from src.analytic import corrected_gap, leading_gap
from src.bw_solver import bw_gap
from src.dto import (
    Anisotropy,
    ComparisonRow,
    FieldValue,
    GapResult,
    LevelSpec,
    Method,
    PrecisionPolicy,
    Spacing,
    SpinValue,
    SweepConfig,
    parse_field,
)
from src.errors import DegenerateFit, InvalidConfig, TunnelError
from src.exact_spectrum import exact_gap
from src.precision import working_context

logger = logging.getLogger("tunnelsplit.runner")

# Interior grid points are rounded to this many significant digits
GRID_DIGITS = 15
# Relative deviations are reported with this many significant digits
DEVIATION_DIGITS = 12
_LOG_DIGITS = 50


class FitResult(BaseModel):
    """Least-squares line through (log10 B, log10 value)."""

    slope: float
    intercept: float
    rms: float
    points: int


def field_grid(config: SweepConfig) -> list[FieldValue]:
    """Field points of a sweep, ascending, endpoints exact."""
    ctx = working_context(GRID_DIGITS + 10)
    low = ctx.fdiv(config.field_min.exact.numerator, config.field_min.exact.denominator)
    high = ctx.fdiv(config.field_max.exact.numerator, config.field_max.exact.denominator)
    last = config.points - 1

    grid = [config.field_min]
    for i in range(1, last):
        fraction = ctx.mpf(i) / last
        match config.spacing:
            case Spacing.LOG:
                point = low * (high / low) ** fraction
            case Spacing.LINEAR:
                point = low + (high - low) * fraction
        grid.append(parse_field(ctx.nstr(point, GRID_DIGITS)))
    grid.append(config.field_max)
    return grid


def compute_gap(
    method: Method,
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
    truncation: Literal[2, 4] = 2,
) -> GapResult:
    """Dispatch one gap computation to its method; `truncation` applies to bw only."""
    match method:
        case Method.EXACT:
            return exact_gap(spin, field, level, anisotropy, policy)
        case Method.LEADING:
            return leading_gap(spin, level, field, anisotropy, policy)
        case Method.CORRECTED:
            return corrected_gap(spin, level, field, anisotropy, policy)
        case Method.BW:
            return bw_gap(
                spin,
                level,
                field,
                anisotropy=anisotropy,
                policy=policy,
                truncation=truncation,
            )
        case _:
            raise ValueError(f"Unknown method: {method}")


def evaluate_point(
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    methods: Sequence[Method],
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
    truncation: Literal[2, 4] = 2,
) -> ComparisonRow:
    """Evaluate every method at one point; failures are recorded, not raised."""
    start = time.perf_counter()
    gaps: dict[str, str | None] = {}
    status: dict[str, str] = {}
    digits: list[int] = []

    for method in methods:
        try:
            result = compute_gap(
                method, spin, level, field, anisotropy, policy, truncation
            )
        except TunnelError as e:
            logger.warning(
                "Method '%s' failed at S=%s n=%d B=%s: %s",
                method,
                spin,
                level.n,
                field,
                e,
            )
            gaps[method.value] = None
            status[method.value] = type(e).__name__
        else:
            gaps[method.value] = result.value
            status[method.value] = "ok"
            digits.append(result.digits_used)

    return ComparisonRow(
        spin=spin.render(),
        n=level.n,
        B=field.render(),
        gaps=gaps,
        rel_dev_vs_exact=_deviations(gaps, methods, max(digits, default=_LOG_DIGITS)),
        digits_used=max(digits, default=0),
        status=status,
        elapsed_ms=round((time.perf_counter() - start) * 1000, 3),
    )


async def run_sweep(config: SweepConfig) -> list[ComparisonRow]:
    """Evaluate a sweep with at most `config.workers` points in flight."""
    levels = config.level_specs()
    grid = field_grid(config)
    logger.info(
        "Sweeping S=%s over %d levels and %d field points with %d workers.",
        config.spin,
        len(levels),
        len(grid),
        config.workers,
    )
    points = [(level, field) for level in levels for field in grid]
    return await _evaluate_all(
        config.spin,
        points,
        config.methods,
        config.anisotropy,
        config.policy,
        config.workers,
        config.bw_truncation,
    )


async def run_comparison(
    spin: SpinValue,
    field: FieldValue,
    levels: Iterable[LevelSpec],
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
    workers: int = 1,
    truncation: Literal[2, 4] = 2,
) -> list[ComparisonRow]:
    """Every method at a single field, one row per level."""
    points = [(level, field) for level in levels]
    return await _evaluate_all(
        spin, points, list(Method), anisotropy, policy, workers, truncation
    )


def fit_exponent(points: Sequence[tuple[str, str]]) -> FitResult:
    """Fit log10(value) = slope * log10(B) + intercept.

    Logs are taken in arbitrary precision, so values far below the float range
    still fit.

    Raises:
        DegenerateFit: with fewer than three points or any non-positive B or value.
    """
    if len(points) < 3:
        raise DegenerateFit(f"A fit needs at least 3 points, got {len(points)}.")

    ctx = working_context(_LOG_DIGITS)
    xs, ys = [], []
    for field, value in points:
        b = ctx.mpf(str(field))
        v = ctx.mpf(str(value))
        if b <= 0 or v <= 0:
            raise DegenerateFit(
                f"Cannot take the log of B={field}, value={value}; both must be positive."
            )
        xs.append(float(ctx.log10(b)))
        ys.append(float(ctx.log10(v)))

    x = np.array(xs)
    y = np.array(ys)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(residuals**2)))
    return FitResult(
        slope=float(slope), intercept=float(intercept), rms=rms, points=len(points)
    )


def fit_rows(
    rows: Sequence[ComparisonRow],
    method: Method,
    residual: bool = False,
    level: int | None = None,
) -> FitResult:
    """Fit a method's gap column, or its |relative deviation| from exact."""
    selected = [row for row in rows if level is None or row.n == level]
    if len({row.n for row in selected}) > 1:
        raise InvalidConfig("Rows span several levels; choose one with --level.")

    points = []
    for row in selected:
        if residual:
            if row.rel_dev_vs_exact is None:
                raise InvalidConfig("Residual fits need the exact method in the rows.")
            value = row.rel_dev_vs_exact.get(method.value)
            value = value.lstrip("-") if value is not None else None
        else:
            value = row.gaps.get(method.value)
        if value is None:
            logger.warning(
                "Skipping B=%s: no %s value (status %s).",
                row.B,
                method,
                row.status.get(method.value, "missing"),
            )
            continue
        points.append((row.B, value))
    return fit_exponent(points)


async def _evaluate_all(
    spin: SpinValue,
    points: list[tuple[LevelSpec, FieldValue]],
    methods: Sequence[Method],
    anisotropy: Anisotropy,
    policy: PrecisionPolicy | None,
    workers: int,
    truncation: Literal[2, 4],
) -> list[ComparisonRow]:
    semaphore = asyncio.Semaphore(workers)

    async def evaluate(level: LevelSpec, field: FieldValue) -> ComparisonRow:
        async with semaphore:
            return await asyncio.to_thread(
                evaluate_point,
                spin,
                level,
                field,
                methods,
                anisotropy,
                policy,
                truncation,
            )

    async with asyncio.TaskGroup() as tg:
        tasks = [tg.create_task(evaluate(level, field)) for level, field in points]

    # Task order, not completion order, fixes the row order
    return [task.result() for task in tasks]


def _deviations(
    gaps: dict[str, str | None], methods: Sequence[Method], digits: int
) -> dict[str, str | None] | None:
    if Method.EXACT not in methods:
        return None
    ctx = working_context(digits)
    exact = gaps.get(Method.EXACT.value)
    deviations: dict[str, str | None] = {}
    for method in methods:
        if method is Method.EXACT:
            continue
        value = gaps.get(method.value)
        if exact is None or value is None or ctx.mpf(exact) == 0:
            deviations[method.value] = None
            continue
        deviation = ctx.mpf(value) / ctx.mpf(exact) - 1
        deviations[method.value] = ctx.nstr(deviation, DEVIATION_DIGITS)
    return deviations

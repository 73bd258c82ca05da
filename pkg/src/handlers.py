"""Command handlers: run the computations and render their results."""

import asyncio
import io
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import pandas as pd

from src import __version__
from src.dto import (
    Anisotropy,
    ComparisonRow,
    FieldValue,
    GapResult,
    LevelSpec,
    Method,
    OutputFormat,
    PrecisionPolicy,
    ReportMeta,
    SpinValue,
    SweepConfig,
    SweepReport,
)
from src.errors import InvalidConfig
from src.exact_spectrum import SpectrumReport, spectrum
from src.runner import FitResult, compute_gap, fit_rows, run_comparison, run_sweep

logger = logging.getLogger("tunnelsplit.handlers")

TOOL_NAME = "tunnelsplit"
CSV_COLUMNS = (
    "spin",
    "n",
    "B",
    "method",
    "gap",
    "rel_dev_vs_exact",
    "digits",
    "status",
    "elapsed_ms",
)


def handle_gap(
    spin: SpinValue,
    field: FieldValue,
    levels: Sequence[LevelSpec],
    methods: Sequence[Method],
    anisotropy: Anisotropy,
    policy: PrecisionPolicy,
    truncation: Literal[2, 4] = 2,
) -> list[GapResult]:
    """Compute every requested (level, method) gap; errors propagate."""
    results = []
    for level in levels:
        for method in methods:
            result = compute_gap(
                method, spin, level, field, anisotropy, policy, truncation
            )
            logger.info(
                "%s gap for S=%s n=%d B=%s at %d digits: %s",
                method,
                spin,
                level.n,
                field,
                result.digits_used,
                result.diagnostics,
            )
            results.append(result)
    return results


def render_gaps(results: Sequence[GapResult]) -> str:
    """A lone gap prints bare; several print as `n method value` lines."""
    if len(results) == 1:
        return results[0].value
    return "\n".join(f"{r.level.n} {r.method} {r.value}" for r in results)


def handle_spectrum(
    spin: SpinValue,
    field: FieldValue,
    anisotropy: Anisotropy,
    policy: PrecisionPolicy,
) -> SpectrumReport:
    """Full parity-labelled spectrum with its doublet pairing."""
    report = spectrum(spin, field, anisotropy, policy)
    broken = [row.n for row in report.doublets if not row.adjacent]
    if broken:
        logger.warning("Doublets %s are not adjacent at B=%s.", broken, field)
    return report


def render_spectrum(report: SpectrumReport) -> str:
    """`index value parity` lines, then one `# doublet` line per doublet."""
    lines = [
        f"{index} {value} {label}"
        for index, (value, label) in enumerate(
            zip(report.rendered_values(), report.eigenvalues.parity_labels)
        )
    ]
    lines.extend(
        f"# doublet {row.n} {row.even} {row.odd} {row.gap} {str(row.adjacent).lower()}"
        for row in report.doublets
    )
    return "\n".join(lines)


def handle_sweep(config: SweepConfig) -> SweepReport:
    """Run a sweep and attach its provenance."""
    rows = asyncio.run(run_sweep(config))
    return _report(rows, config.echo())


def handle_compare(
    spin: SpinValue,
    field: FieldValue,
    levels: Sequence[LevelSpec],
    anisotropy: Anisotropy,
    policy: PrecisionPolicy,
    workers: int,
    truncation: Literal[2, 4] = 2,
) -> SweepReport:
    """Every method at one field."""
    rows = asyncio.run(
        run_comparison(spin, field, levels, anisotropy, policy, workers, truncation)
    )
    echo = {
        "spin": spin.render(),
        "field": field.render(),
        "level": ",".join(str(level.n) for level in levels),
        "method": ",".join(m.value for m in Method),
        "anisotropy": anisotropy.value,
        "precision": policy.render(),
        "bw-truncation": str(truncation),
    }
    return _report(rows, echo)


def handle_fit(
    rows: Sequence[ComparisonRow],
    method: Method,
    residual: bool,
    level: int | None,
) -> FitResult:
    """Fit a sweep column and log the outcome."""
    result = fit_rows(rows, method, residual=residual, level=level)
    logger.info(
        "Fitted %d points: slope %.6f, rms %.3g.", result.points, result.slope, result.rms
    )
    return result


def render_report(report: SweepReport, output_format: OutputFormat) -> str:
    """Render a sweep report in the requested table format."""
    match output_format:
        case OutputFormat.CSV:
            return render_csv(report)
        case OutputFormat.JSON:
            return render_json(report)


def render_csv(report: SweepReport) -> str:
    """One line per (row, method) under a fixed header.

    Every cell is written as a string, so decimal values pass through verbatim.
    """
    records = []
    for row in report.rows:
        deviations = row.rel_dev_vs_exact or {}
        for method, gap in row.gaps.items():
            records.append(
                (
                    row.spin,
                    str(row.n),
                    row.B,
                    method,
                    gap or "",
                    deviations.get(method) or "",
                    str(row.digits_used),
                    row.status.get(method, ""),
                    str(row.elapsed_ms),
                )
            )
    df = pd.DataFrame(records, columns=list(CSV_COLUMNS), dtype=str)
    return df.to_csv(index=False, lineterminator="\n").rstrip("\n")


def render_json(report: SweepReport) -> str:
    """The report with its provenance, as indented JSON."""
    return report.model_dump_json(indent=2, by_alias=True)


def read_rows(path: Path) -> list[ComparisonRow]:
    """Load rows back from a CSV or JSON sweep output."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidConfig(f"Cannot read '{path}': {e}") from None

    if path.suffix.lower() == ".json":
        return SweepReport.model_validate_json(text).rows
    return _rows_from_csv(text)


def write_output(text: str, out: Path) -> None:
    """Write primary output to a file, creating parent directories."""
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n", encoding="utf-8")
    logger.info("Wrote output to '%s'.", out)


def _report(rows: list[ComparisonRow], echo: dict[str, str]) -> SweepReport:
    return SweepReport(
        meta=ReportMeta(tool=TOOL_NAME, version=__version__, config_echo=echo),
        rows=rows,
    )


def _rows_from_csv(text: str) -> list[ComparisonRow]:
    # Strings throughout; empty cells stay "" rather than NaN
    try:
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise InvalidConfig(f"CSV header must be {','.join(CSV_COLUMNS)}.") from None
    except pd.errors.ParserError as e:
        raise InvalidConfig(f"Malformed CSV: {e}") from None
    if tuple(df.columns) != CSV_COLUMNS:
        raise InvalidConfig(f"CSV header must be {','.join(CSV_COLUMNS)}.")

    # Lines sharing (spin, n, B) belong to one row, in order of first appearance
    rows = []
    for (spin, n, field), group in df.groupby(["spin", "n", "B"], sort=False):
        lines = group.to_dict("records")
        gaps = {line["method"]: line["gap"] or None for line in lines}
        deviations = None
        if Method.EXACT.value in gaps:
            deviations = {
                line["method"]: line["rel_dev_vs_exact"] or None
                for line in lines
                if line["method"] != Method.EXACT.value
            }
        rows.append(
            ComparisonRow(
                spin=spin,
                n=int(n),
                B=field,
                gaps=gaps,
                rel_dev_vs_exact=deviations,
                digits_used=max(int(line["digits"]) for line in lines),
                status={line["method"]: line["status"] for line in lines},
                elapsed_ms=float(lines[0]["elapsed_ms"]),
            )
        )
    return rows

"""Test the command handlers and the table renderers."""

import json
from pathlib import Path

import pytest

from src.dto import (
    Anisotropy,
    ComparisonRow,
    FieldValue,
    LevelSpec,
    Method,
    OutputFormat,
    PrecisionPolicy,
    ReportMeta,
    SpinValue,
    SweepConfig,
    SweepReport,
    parse_field,
)
from src.errors import InvalidConfig
from src.handlers import (
    CSV_COLUMNS,
    TOOL_NAME,
    handle_compare,
    handle_fit,
    handle_gap,
    handle_spectrum,
    handle_sweep,
    read_rows,
    render_csv,
    render_gaps,
    render_json,
    render_report,
    render_spectrum,
    write_output,
)


@pytest.fixture
def report() -> SweepReport:
    """Fixture for a two-row comparison report with one failed method."""
    rows = [
        ComparisonRow(
            spin="1",
            n=0,
            B=b,
            gaps={"exact": exact, "leading": leading, "bw": None},
            rel_dev_vs_exact={"leading": deviation, "bw": None},
            digits_used=44,
            status={"exact": "ok", "leading": "ok", "bw": "BracketFailure"},
            elapsed_ms=2.5,
        )
        for b, exact, leading, deviation in [
            ("0.1", "0.0099019513592785", "0.01", "0.00990195135928"),
            ("0.2", "0.038516480713450", "0.04", "0.0385164807134"),
        ]
    ]
    meta = ReportMeta(tool=TOOL_NAME, version="0.1.0", config_echo={"spin": "1"})
    return SweepReport(meta=meta, rows=rows)


def spin_one() -> SpinValue:
    return SpinValue(twice_s=2)


class TestGaps:
    def test_single_gap_prints_bare(self) -> None:
        spin = SpinValue(twice_s=1)
        results = handle_gap(
            spin,
            FieldValue.of("0.2"),
            [LevelSpec.for_spin(spin, 0)],
            [Method.LEADING],
            Anisotropy.EASY_AXIS,
            PrecisionPolicy(),
        )
        assert render_gaps(results) == "0.2"

    def test_several_gaps_print_with_labels(self) -> None:
        spin = SpinValue(twice_s=4)
        results = handle_gap(
            spin,
            FieldValue.of("0.1"),
            [LevelSpec.for_spin(spin, n) for n in (0, 1)],
            [Method.LEADING, Method.EXACT],
            Anisotropy.EASY_AXIS,
            PrecisionPolicy(),
        )
        lines = render_gaps(results).splitlines()
        assert [line.split()[:2] for line in lines] == [
            ["0", "leading"],
            ["0", "exact"],
            ["1", "leading"],
            ["1", "exact"],
        ]


def test_render_spectrum() -> None:
    report = handle_spectrum(
        spin_one(), FieldValue.of("0.1"), Anisotropy.EASY_AXIS, PrecisionPolicy()
    )
    lines = render_spectrum(report).splitlines()
    assert len(lines) == 4
    assert [line.split()[2] for line in lines[:3]] == ["even", "odd", "even"]
    doublet = lines[3].split()
    assert doublet[:3] == ["#", "doublet", "0"]
    assert doublet[-1] == "true"
    assert doublet[-2].startswith("0.0099019513")


class TestRenderReport:
    def test_csv_layout(self, report: SweepReport) -> None:
        lines = render_csv(report).splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 3
        assert lines[1] == "1,0,0.1,exact,0.0099019513592785,,44,ok,2.5"
        assert lines[2] == "1,0,0.1,leading,0.01,0.00990195135928,44,ok,2.5"
        assert lines[3] == "1,0,0.1,bw,,,44,BracketFailure,2.5"

    def test_json_layout(self, report: SweepReport) -> None:
        payload = json.loads(render_json(report))
        assert payload["meta"]["tool"] == TOOL_NAME
        assert payload["rows"][1]["gaps"]["leading"] == "0.04"
        assert payload["rows"][0]["gaps"]["bw"] is None

    def test_json_meta_uses_flag_named_keys(self, report: SweepReport) -> None:
        payload = json.loads(render_json(report))
        assert set(payload["meta"]) == {"tool", "version", "config-echo"}
        assert payload["meta"]["config-echo"] == {"spin": "1"}

    def test_csv_and_json_share_values(self, report: SweepReport) -> None:
        csv_gaps = {
            (line.split(",")[2], line.split(",")[3]): line.split(",")[4]
            for line in render_report(report, OutputFormat.CSV).splitlines()[1:]
        }
        payload = json.loads(render_report(report, OutputFormat.JSON))
        for row in payload["rows"]:
            for method, gap in row["gaps"].items():
                assert csv_gaps[(row["B"], method)] == (gap or "")


class TestReadRows:
    def test_csv_round_trip(self, report: SweepReport, tmp_path: Path) -> None:
        path = tmp_path / "sweep.csv"
        write_output(render_csv(report), path)
        assert read_rows(path) == report.rows

    def test_json_round_trip(self, report: SweepReport, tmp_path: Path) -> None:
        path = tmp_path / "nested" / "sweep.json"
        write_output(render_json(report), path)
        assert read_rows(path) == report.rows

    def test_csv_keeps_decimal_text(self, report: SweepReport, tmp_path: Path) -> None:
        row = report.rows[0].model_copy(
            update={
                "B": "0.10",
                "gaps": {"exact": "1.000E-5", "leading": "0.0100", "bw": None},
                "rel_dev_vs_exact": {"leading": "-0.000", "bw": None},
            }
        )
        path = tmp_path / "sweep.csv"
        write_output(render_csv(report.model_copy(update={"rows": [row]})), path)
        [loaded] = read_rows(path)
        assert loaded.B == "0.10"
        assert loaded.gaps == {"exact": "1.000E-5", "leading": "0.0100", "bw": None}
        assert loaded.rel_dev_vs_exact == {"leading": "-0.000", "bw": None}

    def test_header_only_csv_has_no_rows(self, tmp_path: Path) -> None:
        path = tmp_path / "sweep.csv"
        path.write_text(",".join(CSV_COLUMNS) + "\n", encoding="utf-8")
        assert read_rows(path) == []

    def test_empty_csv(self, tmp_path: Path) -> None:
        path = tmp_path / "sweep.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(InvalidConfig, match="CSV header"):
            read_rows(path)

    def test_bad_header(self, tmp_path: Path) -> None:
        path = tmp_path / "sweep.csv"
        path.write_text("spin,B,gap\n1,0.1,0.01\n", encoding="utf-8")
        with pytest.raises(InvalidConfig, match="CSV header"):
            read_rows(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfig, match="Cannot read"):
            read_rows(tmp_path / "absent.csv")


def test_handle_sweep_attaches_provenance() -> None:
    config = SweepConfig(
        spin=spin_one(),
        field_min=parse_field("0.1"),
        field_max=parse_field("0.2"),
        points=2,
        methods=[Method.LEADING],
        workers=1,
    )
    report = handle_sweep(config)
    assert report.meta.tool == TOOL_NAME
    assert report.meta.config_echo["points"] == "2"
    assert report.meta.config_echo["method"] == "leading"
    assert [row.gaps["leading"] for row in report.rows] == ["0.01", "0.04"]


def test_handle_compare_echoes_every_method() -> None:
    spin = spin_one()
    report = handle_compare(
        spin,
        FieldValue.of("0.1"),
        [LevelSpec.for_spin(spin, 0)],
        Anisotropy.EASY_AXIS,
        PrecisionPolicy(),
        workers=2,
    )
    assert report.meta.config_echo["method"] == "exact,leading,corrected,bw"
    assert len(report.rows) == 1


def test_handle_compare_passes_bw_truncation() -> None:
    spin = SpinValue(twice_s=4)
    report = handle_compare(
        spin,
        FieldValue.of("0.01"),
        [LevelSpec.for_spin(spin, 0)],
        Anisotropy.EASY_AXIS,
        PrecisionPolicy(),
        workers=1,
        truncation=4,
    )
    assert report.meta.config_echo["bw-truncation"] == "4"
    assert report.rows[0].status["bw"] == "ok"


def test_handle_fit(report: SweepReport) -> None:
    extra = report.rows[0].model_copy(
        update={"B": "0.3", "gaps": {"exact": "1", "leading": "0.09", "bw": None}}
    )
    result = handle_fit([*report.rows, extra], Method.LEADING, residual=False, level=0)
    assert result.points == 3
    assert result.slope == pytest.approx(2.0, abs=1e-9)

"""Command-line interface for computing tunnelling splittings.

Primary output goes to stdout (or `--out`); diagnostics and error lines go to
stderr. Run `tunnelsplit --help` for the list of commands.
"""

import json
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, NoReturn, TypeVar

import click
from dotenv import dotenv_values
from pydantic import ValidationError

from src import __version__
from src.config import settings
from src.dto import (
    Anisotropy,
    LevelSpec,
    Method,
    OutputFormat,
    Spacing,
    SpinValue,
    SweepConfig,
    parse_field,
    parse_precision,
    parse_spin,
)
from src.errors import InvalidConfig, InvalidLevel, TunnelError, ValidationFailure
from src.handlers import (
    handle_compare,
    handle_fit,
    handle_gap,
    handle_spectrum,
    handle_sweep,
    read_rows,
    render_gaps,
    render_report,
    render_spectrum,
    write_output,
)
from src.logger import configure_logger

F = TypeVar("F", bound=Callable[..., Any])


def load_config_file(ctx: click.Context, param: click.Parameter, value: Path | None) -> None:
    """Seed the command's defaults from a key=value file; flags still win."""
    if value is None:
        return
    known = {p.name for p in ctx.command.params}
    defaults: dict[str, Any] = {}
    for key, raw in dotenv_values(value).items():
        name = key.strip().replace("-", "_")
        if name not in known or name == "config":
            raise click.BadParameter(f"Unknown key '{key}' in {value}.", param=param)
        defaults[name] = raw
    ctx.default_map = {**(ctx.default_map or {}), **defaults}


def config_option(func: F) -> F:
    """Decorator to add the key=value config file option."""
    return click.option(
        "--config",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        is_eager=True,
        expose_value=False,
        callback=load_config_file,
        help="key=value file with defaults for this command's flags.",
    )(func)


def spin_option(func: F) -> F:
    """Decorator to add the required spin option."""
    return click.option(
        "--spin", required=True, help="Spin S, as 3, 5/2 or 2.5."
    )(func)


def physics_options(func: F) -> F:
    """Decorator to add the anisotropy and precision options."""
    func = click.option(
        "--anisotropy",
        type=click.Choice([a.value for a in Anisotropy]),
        default=Anisotropy.EASY_AXIS.value,
        show_default=True,
        help="Sign of the S_z^2 term.",
    )(func)
    func = click.option(
        "--precision",
        default="auto",
        show_default=True,
        help="Working precision: auto or digits:N (N >= 40).",
    )(func)
    return func


def output_options(func: F) -> F:
    """Decorator to add the output path and format options."""
    func = click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Write primary output here instead of stdout.",
    )(func)
    func = click.option(
        "--format",
        "output_format",
        type=click.Choice([f.value for f in OutputFormat]),
        default=OutputFormat.CSV.value,
        show_default=True,
        help="Table format.",
    )(func)
    return func


def grid_options(func: F) -> F:
    """Decorator to add the field-grid options of a sweep."""
    func = click.option("--field-min", default=None, help="Smallest field.")(func)
    func = click.option("--field-max", default=None, help="Largest field.")(func)
    func = click.option(
        "--points", type=int, default=10, show_default=True, help="Grid points."
    )(func)
    func = click.option(
        "--spacing",
        type=click.Choice([s.value for s in Spacing]),
        default=Spacing.LOG.value,
        show_default=True,
    )(func)
    return func


def truncation_option(func: F) -> F:
    """Decorator to add the bw series truncation option."""
    return click.option(
        "--bw-truncation",
        type=click.Choice(["2", "4"]),
        default="2",
        show_default=True,
        help="Order of the bw self-energy series; 4 needs --level 0.",
    )(func)


def workers_option(func: F) -> F:
    """Decorator to add the sweep concurrency option."""
    return click.option(
        "--workers",
        type=int,
        default=lambda: settings.sweep_workers,
        help="Sweep points evaluated concurrently.",
    )(func)


@contextmanager
def reporting_errors() -> Iterator[None]:
    """Turn domain and validation errors into a JSON error line and exit code."""
    try:
        yield
    except TunnelError as e:
        _fail(type(e).__name__, str(e), e.exit_code)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        _fail(ValidationFailure.__name__, messages, ValidationFailure.exit_code)


def parse_levels(text: str, spin: SpinValue) -> list[LevelSpec]:
    """Parse `all` or a comma-separated list of doublet indices."""
    if text.strip().lower() == "all":
        return [LevelSpec.for_spin(spin, n) for n in range(spin.doublet_count)]
    try:
        indices = [int(part) for part in text.split(",")]
    except ValueError:
        raise InvalidLevel(f"Malformed level '{text}'. Use n, n,m or all.") from None
    return [LevelSpec.for_spin(spin, n) for n in indices]


def parse_methods(text: str) -> list[Method]:
    """Parse `all` or a comma-separated list of methods."""
    if text.strip().lower() == "all":
        return list(Method)
    try:
        return [Method(part.strip().lower()) for part in text.split(",")]
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise InvalidConfig(f"Unknown method in '{text}'. Use {choices} or all.") from None


@click.group()
@click.version_option(version=__version__, prog_name="tunnelsplit")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=lambda: settings.log_level,
    help="Diagnostic verbosity on stderr.",
)
def cli(log_level: str) -> None:
    """Tunnelling splittings of a spin in a weak transverse field."""
    configure_logger(log_level.upper())


@cli.command()
@config_option
@spin_option
@click.option("--field", required=True, help="Transverse field B.")
@click.option("--level", default="0", show_default=True, help="n, n,m or all.")
@click.option("--method", default="exact", show_default=True, help="Method or all.")
@physics_options
@truncation_option
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def gap(
    spin: str,
    field: str,
    level: str,
    method: str,
    anisotropy: str,
    precision: str,
    bw_truncation: str,
    out: Path | None,
) -> None:
    """Compute one or more splittings at a single field."""
    with reporting_errors():
        spin_value = parse_spin(spin)
        results = handle_gap(
            spin_value,
            parse_field(field),
            parse_levels(level, spin_value),
            parse_methods(method),
            Anisotropy(anisotropy),
            parse_precision(precision, settings.guard_digits),
            int(bw_truncation),  # type: ignore[arg-type]
        )
        _emit(render_gaps(results), out)


@cli.command()
@config_option
@spin_option
@grid_options
@click.option("--level", default="all", show_default=True, help="n, n,m or all.")
@click.option("--method", default="all", show_default=True, help="Methods or all.")
@physics_options
@truncation_option
@output_options
@workers_option
def sweep(
    spin: str,
    field_min: str | None,
    field_max: str | None,
    points: int,
    spacing: str,
    level: str,
    method: str,
    anisotropy: str,
    precision: str,
    bw_truncation: str,
    out: Path | None,
    output_format: str,
    workers: int,
) -> None:
    """Evaluate methods over a grid of fields."""
    with reporting_errors():
        config = _sweep_config(
            spin,
            field_min,
            field_max,
            points,
            spacing,
            level,
            parse_methods(method),
            anisotropy,
            precision,
            workers,
            bw_truncation,
        )
        report = handle_sweep(config)
        _emit(render_report(report, OutputFormat(output_format)), out)


@cli.command()
@config_option
@spin_option
@click.option("--field", required=True, help="Transverse field B.")
@click.option("--level", default="all", show_default=True, help="n, n,m or all.")
@physics_options
@truncation_option
@output_options
@workers_option
def compare(
    spin: str,
    field: str,
    level: str,
    anisotropy: str,
    precision: str,
    bw_truncation: str,
    out: Path | None,
    output_format: str,
    workers: int,
) -> None:
    """Evaluate every method at a single field."""
    with reporting_errors():
        spin_value = parse_spin(spin)
        report = handle_compare(
            spin_value,
            parse_field(field),
            parse_levels(level, spin_value),
            Anisotropy(anisotropy),
            parse_precision(precision, settings.guard_digits),
            workers,
            int(bw_truncation),  # type: ignore[arg-type]
        )
        _emit(render_report(report, OutputFormat(output_format)), out)


@cli.command()
@config_option
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Sweep output (CSV or JSON) to fit; otherwise the sweep runs inline.",
)
@click.option("--method", default="leading", show_default=True, help="Column to fit.")
@click.option(
    "--residual",
    is_flag=True,
    help="Fit |relative deviation from exact| instead of the gap.",
)
@click.option("--spin", default=None, help="Spin S for an inline sweep.")
@grid_options
@click.option("--level", default="0", show_default=True, help="Level to fit.")
@physics_options
@truncation_option
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@workers_option
def fit(
    input_path: Path | None,
    method: str,
    residual: bool,
    spin: str | None,
    field_min: str | None,
    field_max: str | None,
    points: int,
    spacing: str,
    level: str,
    anisotropy: str,
    precision: str,
    bw_truncation: str,
    out: Path | None,
    workers: int,
) -> None:
    """Fit the power of B in a gap or residual column."""
    with reporting_errors():
        target = parse_methods(method)
        if len(target) != 1:
            raise InvalidConfig("Fit one method at a time.")
        fitted = target[0]
        try:
            level_index = int(level)
        except ValueError:
            raise InvalidLevel(f"Fit needs a single level, got '{level}'.") from None

        if input_path is not None:
            rows = read_rows(input_path)
        else:
            if spin is None:
                raise InvalidConfig("fit needs --input or the inline sweep flags.")
            methods = [Method.EXACT, fitted] if residual else [fitted]
            config = _sweep_config(
                spin,
                field_min,
                field_max,
                points,
                spacing,
                str(level_index),
                list(dict.fromkeys(methods)),
                anisotropy,
                precision,
                workers,
                bw_truncation,
            )
            rows = handle_sweep(config).rows

        result = handle_fit(rows, fitted, residual, level_index)
        _emit(result.model_dump_json(), out)


@cli.command()
@config_option
@spin_option
@click.option("--field", required=True, help="Transverse field B.")
@physics_options
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def spectrum(
    spin: str, field: str, anisotropy: str, precision: str, out: Path | None
) -> None:
    """List every level with its parity and the doublet pairing."""
    with reporting_errors():
        report = handle_spectrum(
            parse_spin(spin),
            parse_field(field),
            Anisotropy(anisotropy),
            parse_precision(precision, settings.guard_digits),
        )
        _emit(render_spectrum(report), out)


def _sweep_config(
    spin: str,
    field_min: str | None,
    field_max: str | None,
    points: int,
    spacing: str,
    level: str,
    methods: list[Method],
    anisotropy: str,
    precision: str,
    workers: int,
    bw_truncation: str = "2",
) -> SweepConfig:
    if field_min is None or field_max is None:
        raise InvalidConfig("A sweep needs --field-min and --field-max.")
    spin_value = parse_spin(spin)
    levels = parse_levels(level, spin_value)
    return SweepConfig(
        spin=spin_value,
        levels=None if level.strip().lower() == "all" else [lv.n for lv in levels],
        field_min=parse_field(field_min),
        field_max=parse_field(field_max),
        points=points,
        spacing=Spacing(spacing),
        methods=methods,
        anisotropy=Anisotropy(anisotropy),
        policy=parse_precision(precision, settings.guard_digits),
        workers=workers,
        bw_truncation=int(bw_truncation),
    )


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text)
    else:
        write_output(text, out)


def _fail(name: str, message: str, exit_code: int) -> NoReturn:
    click.echo(
        json.dumps({"error": name, "message": message, "exit_code": exit_code}),
        err=True,
    )
    click.get_current_context().exit(exit_code)


if __name__ == "__main__":
    cli()

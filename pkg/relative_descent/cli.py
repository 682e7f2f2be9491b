"""
Command-line interface for relative_descent experiments.

Usage:
    relative-descent run CONFIG.toml [--output DIR] [--workers N]
    relative-descent run --preset figure1
    relative-descent bounds --preset figure1
    relative-descent check CONFIG.toml [--smoothness-scale 0.1]
    relative-descent presets
    relative-descent export-preset figure2 figure2.json

The default output directory is read from RELDESCENT_OUTPUT_DIR.
"""

import logging
from collections import Counter
from pathlib import Path
from typing import Annotated, NoReturn, Optional

import typer
from rich.console import Console
from rich.table import Table

from .config import RunnerSettings
from .errors import ConfigError, MissingCertificate
from .experiment import check as run_checks
from .experiment import emit_bounds, load_config, run_experiment
from .models import ExperimentConfig
from .presets import DESCRIPTIONS, PRESETS, get_preset
from .storage import write_config

logger = logging.getLogger(__name__)
console = Console()

app = typer.Typer(
    help="Relative-smoothness descent methods: run benchmark experiments, tabulate bounds, verify certificates.",
    no_args_is_help=True,
)

ConfigArgument = Annotated[Optional[Path], typer.Argument(help="Experiment config (.toml or .json)")]
PresetOption = Annotated[Optional[str], typer.Option("--preset", "-p", help="Built-in config name")]
OutputOption = Annotated[
    Optional[Path], typer.Option("--output", "-o", help="Output directory (default: RELDESCENT_OUTPUT_DIR/<name>)")
]


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Verbose output")] = False,
):
    settings = RunnerSettings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def _resolve(config_path: Optional[Path], preset: Optional[str]) -> tuple[ExperimentConfig, Optional[Path]]:
    """Load the config named on the command line; base_dir anchors relative instance paths."""
    if (config_path is None) == (preset is None):
        raise ConfigError("give exactly one of a config path or --preset")
    if preset is not None:
        return get_preset(preset), None
    return load_config(config_path), config_path.resolve().parent


def _fail(message: str) -> NoReturn:
    logger.error(message)
    console.print(f"[red]Error:[/red] {message}")
    raise typer.Exit(code=1)


@app.command()
def run(
    config_path: ConfigArgument = None,
    preset: PresetOption = None,
    output: OutputOption = None,
    workers: Annotated[Optional[int], typer.Option("--workers", "-w", help="Parallel replicate workers")] = None,
    bounds: Annotated[bool, typer.Option("--bounds/--no-bounds", help="Also write bound overlays")] = True,
    progress: Annotated[bool, typer.Option("--progress/--no-progress", help="Show a progress bar")] = True,
):
    """
    Run every configured algorithm over every replicate and write traces,
    bound overlays and the manifest.
    """
    try:
        config, base_dir = _resolve(config_path, preset)
        manifest = run_experiment(config, output, workers, base_dir=base_dir, progress=progress, bounds=bounds)
    except ConfigError as e:
        _fail(str(e))

    table = Table(title=f"Experiment {manifest.name}")
    for column in ("algorithm", "runs", "ok", "aborted", "failed"):
        table.add_column(column, justify="left" if column == "algorithm" else "right")
    by_label: dict[str, Counter] = {}
    for record in manifest.runs:
        by_label.setdefault(record.label, Counter())[record.status] += 1
    for label, counts in by_label.items():
        table.add_row(
            label, str(sum(counts.values())), str(counts["ok"]), str(counts["aborted"]), str(counts["failed"])
        )
    console.print(table)
    if manifest.f_star is not None:
        console.print(f"f* = {manifest.f_star:.12g} ({manifest.f_star_kind})")
    for note in manifest.notes:
        console.print(f"- {note}")
    if any(record.status == "failed" for record in manifest.runs):
        raise typer.Exit(code=1)


@app.command()
def bounds(
    config_path: ConfigArgument = None,
    preset: PresetOption = None,
    output: OutputOption = None,
):
    """Tabulate the theoretical bounds on each algorithm's iteration grid."""
    try:
        config, base_dir = _resolve(config_path, preset)
        written = emit_bounds(config, output, base_dir=base_dir, strict=True)
    except (ConfigError, MissingCertificate) as e:
        _fail(str(e))
    for label, path in written.items():
        console.print(f"{label}: {path}")


@app.command()
def check(
    config_path: ConfigArgument = None,
    preset: PresetOption = None,
    output: OutputOption = None,
    smoothness_scale: Annotated[
        Optional[float], typer.Option("--smoothness-scale", help="Check relative smoothness at L times this factor")
    ] = None,
):
    """Verify the configured problem's certificates numerically; exits 1 when any check fails."""
    try:
        config, base_dir = _resolve(config_path, preset)
        if smoothness_scale is not None:
            config = config.model_copy(
                update={"check": config.check.model_copy(update={"smoothness_scale": smoothness_scale})}
            )
        reports = run_checks(config, output, base_dir=base_dir)
    except ConfigError as e:
        _fail(str(e))

    table = Table(title="Certificate checks")
    table.add_column("check")
    table.add_column("samples", justify="right")
    table.add_column("worst slack", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("result")
    for report in reports:
        table.add_row(
            report.name,
            str(report.n_samples),
            f"{report.worst_slack:.3e}",
            f"{report.tolerance:.1e}",
            "[green]pass[/green]" if report.passed else "[red]FAIL[/red]",
        )
    console.print(table)
    failed = [report for report in reports if not report.passed]
    if failed:
        for report in failed:
            console.print(f"[red]{report.name}[/red]: {report.detail} witness={report.witness}")
        raise typer.Exit(code=1)


@app.command()
def presets():
    """List the built-in experiment configs."""
    table = Table(title="Presets")
    table.add_column("name")
    table.add_column("description")
    for name in PRESETS:
        table.add_row(name, DESCRIPTIONS[name])
    console.print(table)


@app.command("export-preset")
def export_preset(
    name: Annotated[str, typer.Argument(help="Preset name")],
    path: Annotated[Path, typer.Argument(help="Destination JSON file")],
):
    """Write a built-in config as JSON, ready to edit and pass to `run`."""
    try:
        config = get_preset(name)
    except ConfigError as e:
        _fail(str(e))
    write_config(config, path)
    console.print(f"Wrote {name} to {path}")


if __name__ == "__main__":
    app()

"""Command-line interface for lowdim-xray."""

import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import pydantic

from .config import Config
from .errors import LowdimError, ValidationError
from .experiment import ExperimentConfig
from .physics.ingest import ingest_elements
from .runner import ExperimentRunner

logger = logging.getLogger(__name__)


def _setup_logging(level: str | None, config: Config) -> None:
    logging.basicConfig(level=(level or config.log_level).upper(), format="%(levelname)s %(name)s: %(message)s")


def _pydantic_message(e: pydantic.ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in err['loc']) or e.title}: {err['msg']}" for err in e.errors())


def _handle_errors(command: Callable[..., None]) -> Callable[..., None]:
    """Turn library errors into one ``Error:`` line on stderr and the documented exit code."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            command(*args, **kwargs)
        except LowdimError as e:
            click.echo(f"Error: {e}", err=True)
            raise click.exceptions.Exit(e.exit_code) from e
        except pydantic.ValidationError as e:
            click.echo(f"Error: {_pydantic_message(e)}", err=True)
            raise click.exceptions.Exit(ValidationError.exit_code) from e

    return wrapper


def _experiment_options(command: Callable[..., None]) -> Callable[..., None]:
    options = [
        click.option("--config", "config_path", required=True, type=click.Path(path_type=Path), help="Experiment config (JSON)"),
        click.option("--seed", default=None, type=click.IntRange(0, 2**64 - 1), help="Experiment seed (overrides the config)"),
        click.option("--out", default=None, type=click.Path(path_type=Path), help="Output directory (overrides the config)"),
        click.option("--data-dir", default=None, type=click.Path(path_type=Path), help="Element table directory"),
        click.option("--log-level", default=None, help="Logging level name"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _make_runner(config_path: Path, seed: int | None, out: Path | None, data_dir: Path | None, log_level: str | None) -> ExperimentRunner:
    env = Config()
    _setup_logging(log_level, env)

    errors = env.validate()
    if errors:
        raise ValidationError("; ".join(errors))

    experiment = ExperimentConfig.load(config_path)
    # flag > experiment file > environment
    resolved_seed = seed if seed is not None else experiment.seed if experiment.seed is not None else env.seed
    out_dir = out or experiment.out_dir or env.out_dir
    data = data_dir or experiment.data_dir or env.data_dir
    logger.info("Experiment %s: seed %d, out %s", experiment.name, resolved_seed, out_dir)
    return ExperimentRunner(experiment, out_dir, data, resolved_seed)


@click.group()
@click.version_option(package_name="lowdim-xray")
def main() -> None:
    """lowdim-xray - low-dimensional models of X-ray attenuation spectra."""
    pass


@main.command()
@click.option("--data-dir", default=None, type=click.Path(path_type=Path), help="Where to write the element tables")
@click.option("--e-lo", default=10.0, show_default=True, help="Lowest tabulated energy (keV)")
@click.option("--e-hi", default=200.0, show_default=True, help="Highest tabulated energy (keV)")
@click.option("--n-points", default=81, show_default=True, help="Log-spaced samples per element")
@click.option("--log-level", default=None, help="Logging level name")
@_handle_errors
def ingest(data_dir: Path | None, e_lo: float, e_hi: float, n_points: int, log_level: str | None) -> None:
    """Write the 92 element attenuation tables from xraydb."""
    env = Config()
    _setup_logging(log_level, env)
    out_dir = data_dir or env.data_dir
    paths = ingest_elements(out_dir, e_lo, e_hi, n_points)
    click.echo(f"Wrote {len(paths)} files to {out_dir}")


@main.command()
@_experiment_options
@_handle_errors
def synthesize(config_path: Path, seed: int | None, out: Path | None, data_dir: Path | None, log_level: str | None) -> None:
    """Build every dataset of the experiment with its train/val/test split."""
    runner = _make_runner(config_path, seed, out, data_dir, log_level)
    for directory in runner.synthesize():
        click.echo(f"Wrote dataset: {directory}")
    runner.write_manifest()


@main.command()
@_experiment_options
@click.option("--model", "model_names", multiple=True, help="Model to train (repeatable; default: all)")
@_handle_errors
def train(
    config_path: Path, seed: int | None, out: Path | None, data_dir: Path | None, log_level: str | None, model_names: tuple[str, ...]
) -> None:
    """Fit or train the experiment's models."""
    runner = _make_runner(config_path, seed, out, data_dir, log_level)
    for result in runner.train(list(model_names) or None):
        click.echo(f"Saved model: {result.path}")
        if result.history is not None and result.history.train_loss:
            click.echo(f"  final training loss: {result.history.train_loss[-1]:.6g}")
        for key, value in result.notes.items():
            click.echo(f"  {key}: {value:g}")
    runner.write_manifest()


@main.command()
@_experiment_options
@click.option("--export-codes", is_flag=True, help="Also write each model's per-spectrum codes")
@_handle_errors
def evaluate(
    config_path: Path, seed: int | None, out: Path | None, data_dir: Path | None, log_level: str | None, export_codes: bool
) -> None:
    """Evaluate models on datasets and write the NMSE report bundle."""
    runner = _make_runner(config_path, seed, out, data_dir, log_level)
    reports = runner.evaluate(export_codes=export_codes)

    click.echo(f"\n{runner.config.name} results:")
    for report in reports:
        s = report.summary
        click.echo(f"  {report.model_name} on {report.dataset_name}: mean NMSE {s.mean:.4g}, median {s.median:.4g}")
    click.echo(f"Report written to {runner.report_dir}")
    runner.write_manifest()


@main.command()
@_experiment_options
@_handle_errors
def report(config_path: Path, seed: int | None, out: Path | None, data_dir: Path | None, log_level: str | None) -> None:
    """Re-render the report bundle from an existing report.json."""
    runner = _make_runner(config_path, seed, out, data_dir, log_level)
    for path in runner.report():
        click.echo(f"Generated: {path}")


if __name__ == "__main__":
    main()

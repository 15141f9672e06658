"""Typer console interface for the ``thinfilm`` package (``tfilm``).

One subcommand per experiment. Each loads ``.env`` (``THINFILM_*`` variables),
configures logging, validates the JSON config with the command-line overrides
applied, and delegates to :func:`thinfilm.api.run`. The process exit code is
the run's: ``0`` PASS, ``2`` FAIL, ``1`` error.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated

import typer
from dotenv import load_dotenv
from typer.models import OptionInfo

from .api import EXIT_ERROR, run
from .config import parse_config
from .logging_setup import configure_logging

# Module-level option objects keep ruff B008 quiet (no calls in defaults). Inside
# ``Annotated`` the first positional argument is the flag name; defaults sit on
# the parameters.
CONFIG_OPTION: OptionInfo = typer.Option(
    "--config",
    help="JSON config document; omitted blocks take their defaults.",
    dir_okay=False,
    file_okay=True,
)
OUT_OPTION: OptionInfo = typer.Option(
    "--out",
    help="Run directory (falls back to config out_dir, then THINFILM_OUT_DIR).",
    file_okay=False,
)
SEED_OPTION: OptionInfo = typer.Option(
    "--seed", min=0, help="Seed for randomized fields (overrides the config)."
)
EMIT_FIELDS_OPTION: OptionInfo = typer.Option(
    "--emit-fields", help="Also write physical-space snapshots (fields.tfbin)."
)
OVERRIDE_OPTION: OptionInfo = typer.Option(
    "--override", help="Dotted config override key=value; repeatable."
)


app = typer.Typer(
    no_args_is_help=True,
    add_completion=False,
    help=(
        "Thin-film solver and verification harness. Every subcommand writes CSV/JSON "
        "artifacts and exits 0 on PASS, 2 on FAIL, 1 on error."
    ),
)


def _execute(
    experiment: str,
    config_path: Path | None,
    out: Path | None,
    seed: int | None,
    emit_fields: bool,
    overrides: list[str] | None,
) -> None:
    """Load config and overrides, run, print the verdict line and exit with its code."""

    load_dotenv(override=False)
    configure_logging()

    items = list(overrides or [])
    if seed is not None:
        items.append(f"seed={seed}")
    if emit_fields:
        items.append("emit_fields=true")
    items.append(f"experiment={experiment}")
    try:
        text = config_path.read_text(encoding="utf-8") if config_path else ""
        config = parse_config(text, items)
    except FileNotFoundError as exc:
        typer.echo(f"Error: config not found: {config_path}", err=True)
        raise typer.Exit(EXIT_ERROR) from exc
    except (OSError, ValueError) as exc:
        typer.echo(f"Error: invalid config: {exc}", err=True)
        raise typer.Exit(EXIT_ERROR) from exc

    outcome = run(config, out_dir=out)
    if outcome.error is not None:
        typer.echo(f"Error: {experiment} failed: {outcome.error}", err=True)
    else:
        verdict = "PASS" if outcome.passed else "FAIL"
        typer.echo(f"{experiment}: {verdict} ({outcome.out_dir})")
    raise typer.Exit(outcome.exit_code)


@app.command("simulate")
def simulate_cmd(
    config: Annotated[Path | None, CONFIG_OPTION] = None,
    out: Annotated[Path | None, OUT_OPTION] = None,
    seed: Annotated[int | None, SEED_OPTION] = None,
    emit_fields: Annotated[bool, EMIT_FIELDS_OPTION] = False,
    override: Annotated[list[str] | None, OVERRIDE_OPTION] = None,
) -> None:
    """Evolve one initial field; check energy, mean and smoothing."""

    _execute("simulate", config, out, seed, emit_fields, override)


@app.command("kernel-check")
def kernel_check_cmd(
    config: Annotated[Path | None, CONFIG_OPTION] = None,
    out: Annotated[Path | None, OUT_OPTION] = None,
    seed: Annotated[int | None, SEED_OPTION] = None,
    override: Annotated[list[str] | None, OVERRIDE_OPTION] = None,
) -> None:
    """Certify the symbol split and the semigroup bounds."""

    _execute("kernel-check", config, out, seed, False, override)


@app.command("illposed")
def illposed_cmd(
    config: Annotated[Path | None, CONFIG_OPTION] = None,
    out: Annotated[Path | None, OUT_OPTION] = None,
    seed: Annotated[int | None, SEED_OPTION] = None,
    override: Annotated[list[str] | None, OVERRIDE_OPTION] = None,
) -> None:
    """Fit the norm-inflation slope of the second flow derivative."""

    _execute("illposed", config, out, seed, False, override)


@app.command("sweep")
def sweep_cmd(
    config: Annotated[Path | None, CONFIG_OPTION] = None,
    out: Annotated[Path | None, OUT_OPTION] = None,
    seed: Annotated[int | None, SEED_OPTION] = None,
    override: Annotated[list[str] | None, OVERRIDE_OPTION] = None,
) -> None:
    """Measure how fast solutions converge as the parameters approach the vertical film."""

    _execute("sweep", config, out, seed, False, override)


@app.command("picard-validate")
def picard_validate_cmd(
    config: Annotated[Path | None, CONFIG_OPTION] = None,
    out: Annotated[Path | None, OUT_OPTION] = None,
    seed: Annotated[int | None, SEED_OPTION] = None,
    emit_fields: Annotated[bool, EMIT_FIELDS_OPTION] = False,
    override: Annotated[list[str] | None, OVERRIDE_OPTION] = None,
) -> None:
    """Compare the Duhamel iteration with the exponential stepper."""

    _execute("picard-validate", config, out, seed, emit_fields, override)


if __name__ == "__main__":  # pragma: no cover
    app()

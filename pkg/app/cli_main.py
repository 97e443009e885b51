"""
chemotax-lv CLI - command-line interface for the chemotaxis competition lab.
"""

import json
import sys
from pathlib import Path
from typing import Annotated, Optional

import typer
from typer import Option, Typer

from app.core.config_paths import ensure_env_loaded, resolve_out_dir
from app.core.errors import ConfigError
from app.core.logging import configure_logging

# Initialize main CLI app
app = Typer(
    name="chemotax-lv",
    help="Numerical lab for a two-species competition system with chemotaxis",
    add_completion=False,
    no_args_is_help=True,
)

config_app = Typer(help="Run configuration tools")
app.add_typer(config_app, name="config")

# Version information
VERSION = "0.1.0"

ConfigOpt = Annotated[
    Optional[Path], Option("--config", "-c", help="Run configuration file (key = value)")
]
OutOpt = Annotated[
    Optional[str], Option("--out", "-o", help="Output directory (default: $CHEMOTAX_LV_OUT or ./chemotax_out)")
]
SeedOpt = Annotated[Optional[int], Option("--seed", help="Override the config seed")]
LogLevelOpt = Annotated[
    Optional[str], Option("--log-level", "-l", help="Log level (default: $CHEMOTAX_LV_LOG_LEVEL or WARNING)")
]


def print_success(message: str):
    """Print success message in green."""
    symbol = "[OK]" if sys.platform == "win32" else "✓"
    typer.echo(typer.style(f"{symbol} {message}", fg=typer.colors.GREEN, bold=True))


def print_error(message: str):
    """Print error message in red."""
    symbol = "[ERROR]" if sys.platform == "win32" else "✗"
    typer.echo(
        typer.style(f"{symbol} {message}", fg=typer.colors.RED, bold=True), err=True
    )


def print_warning(message: str):
    """Print warning message in yellow."""
    symbol = "[WARNING]" if sys.platform == "win32" else "⚠"
    typer.echo(typer.style(f"{symbol} {message}", fg=typer.colors.YELLOW, bold=True))


def print_info(message: str):
    """Print info message in blue."""
    symbol = "[INFO]" if sys.platform == "win32" else "ℹ"
    typer.echo(typer.style(f"{symbol} {message}", fg=typer.colors.BLUE))


def _run(command: str, config: Optional[Path], out: Optional[str], seed: Optional[int], log_level: Optional[str]):
    """Shared body of every run command; always ends in typer.Exit."""
    from app.experiments.runner import run_file

    configure_logging(log_level, force=log_level is not None)
    try:
        out_dir = resolve_out_dir(out)
    except OSError as e:
        print_error(str(e))
        raise typer.Exit(2)

    code = run_file(command, config, out_dir, seed=seed, version=VERSION)
    manifest = out_dir / "manifest.json"
    if code == 0:
        print_success(f"{command} finished; outputs in {out_dir}")
    else:
        try:
            error = json.loads(manifest.read_text(encoding="utf-8")).get("error")
        except (OSError, ValueError):
            error = None
        if error:
            print_error(f"{command} failed: {error['type']}: {error['message']}")
        else:
            print_error(f"{command} finished with exit code {code}")
        print_info(f"Manifest: {manifest}")
    raise typer.Exit(code)


@app.command()
def equilibria(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Tabulate the constant equilibria and the competition regime.

    Example:
        chemotax-lv equilibria --config weak.cfg --out runs/eq
    """
    _run("equilibria", config, out, seed, log_level)


@app.command()
def stability(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Dispersion table k = 1..k_max with chi_k and both growth rates.

    Example:
        chemotax-lv stability --config weak.cfg
    """
    _run("stability", config, out, seed, log_level)


@app.command()
def simulate(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Integrate the time-dependent system and record snapshots and diagnostics.

    Example:
        chemotax-lv simulate --config above_threshold.cfg --seed 7
    """
    _run("simulate", config, out, seed, log_level)


@app.command("continue")
def continue_(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Continue the steady branch bifurcating from chi_k.

    Example:
        chemotax-lv continue --config branch_k1.cfg
    """
    _run("continue", config, out, seed, log_level)


@app.command("shadow-branch")
def shadow_branch(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Continue the shadow-system branch from eps_n in eps.

    Example:
        chemotax-lv shadow-branch --config shadow.cfg
    """
    _run("shadow-branch", config, out, seed, log_level)


@app.command()
def layer(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Solve for a single transition-layer steady state of the shadow system.

    Example:
        chemotax-lv layer --config layer.cfg
    """
    _run("layer", config, out, seed, log_level)


@app.command("verify-shadow-limit")
def verify_shadow_limit(
    config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None
):
    """
    Check that full steady states approach the shadow system as D1 grows.

    Example:
        chemotax-lv verify-shadow-limit --config limit.cfg
    """
    _run("verify-shadow-limit", config, out, seed, log_level)


@app.command("verify-all")
def verify_all(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None, log_level: LogLevelOpt = None):
    """
    Run the acceptance checks; exit 0 only when every check passes.

    Example:
        chemotax-lv verify-all --out runs/acceptance
    """
    _run("verify-all", config, out, seed, log_level)


@config_app.command("show")
def config_show(config: ConfigOpt = None):
    """
    Print the resolved configuration, defaults included.

    Example:
        chemotax-lv config show --config layer.cfg
    """
    from app.experiments.config_loader import config_loader

    try:
        resolved = config_loader.load_config(config)
    except (ConfigError, FileNotFoundError) as e:
        print_error(str(e))
        raise typer.Exit(2)
    typer.echo(json.dumps(resolved.echo(), indent=2, sort_keys=True))
    for warning in resolved.warnings:
        print_warning(warning)


@config_app.command("validate")
def config_validate(
    config: Annotated[Path, Option("--config", "-c", help="Run configuration file")],
    command: Annotated[str, Option("--command", help="Validate for this command")] = "simulate",
):
    """
    Parse and validate a configuration without running anything.

    Example:
        chemotax-lv config validate --config layer.cfg --command layer
    """
    from app.core.validation import COMMAND_CHECKS, validate_run
    from app.experiments.config_loader import config_loader

    if command not in COMMAND_CHECKS:
        print_error(f"Unknown command '{command}'")
        raise typer.Exit(2)
    try:
        resolved = config_loader.load_config(config)
        validate_run(command, resolved)
    except FileNotFoundError as e:
        print_error(str(e))
        raise typer.Exit(2)
    except ConfigError as e:
        print_error(e.get_error_summary())
        for message in e.details.get("errors", []):
            print_info(message)
        raise typer.Exit(e.exit_code)
    for warning in resolved.warnings:
        print_warning(warning)
    print_success(f"Configuration is valid for '{command}'")


@app.command()
def version(
    verbose: Annotated[
        bool, Option("--verbose", "-v", help="Show detailed version information")
    ] = False,
):
    """
    Show version information.

    Example:
        chemotax-lv version --verbose
    """
    print_success(f"chemotax-lv version: {VERSION}")

    if verbose:
        print(f"\nPython: {sys.version.split()[0]}")
        print(f"Platform: {sys.platform}")

        for module in ("numpy", "scipy", "pandas", "pydantic"):
            try:
                imported = __import__(module)
                print(f"{module}: {imported.__version__}")
            except (ImportError, AttributeError):
                pass


def main():
    """Main entry point for the CLI."""
    ensure_env_loaded()
    app()

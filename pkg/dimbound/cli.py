#!/usr/bin/env python3
"""CLI tool to run dimension-bound experiments.

Every subcommand reads an optional JSON configuration (``--config``), applies the flags on top and writes its report
into the output directory. Exit codes: 0 on success, 2 for invalid input or configuration, 3 if a computation could
not certify its result. Errors are printed to stderr as JSON.
"""

import json
import sys
from pathlib import Path
from typing import Any

import pydantic
from dotenv import load_dotenv
from loguru import logger
from typer import Exit, Option, Typer, echo

from dimbound.examples import EXAMPLE_DIR, EXAMPLES
from dimbound.exception import ConfigurationError, InvalidInputError, NumericalFailure
from dimbound.models import PipelineConfig
from dimbound.pipeline import run
from dimbound.utils.serializer import dumps, write_json

load_dotenv()

app = Typer(help="Covering-number and box-counting dimension bounds for attractors")

EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ConfigOption = Option(None, "--config", "-c", help="JSON experiment configuration")
SeedOption = Option(None, "--seed", envvar="DIMBOUND_SEED", help="Seed of all quasi-random samples")
OutOption = Option(None, "--out", "-o", envvar="DIMBOUND_OUT", help="Output directory")
HilbertOption = Option(False, "--hilbert-constant", help="Use the constant 7 for Euclidean type norms")
VerboseOption = Option(False, "--verbose", "-v", help="Log debug messages")


def _configure_logging(verbose: bool):
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO", format="{level: <8} | {message}")


def _fail(code: int, error: dict[str, Any], out: Path | None):
    echo(json.dumps(error, sort_keys=True, ensure_ascii=False), err=True)
    if out is not None:
        write_json(out / "error.json", error)
    raise Exit(code)


def _parse_floats(text: str | None) -> list[float] | None:
    return None if text is None else [float(value) for value in text.split(",")]


def _parse_parameters(values: list[str] | None) -> dict[str, Any]:
    parameters = {}
    for value in values or []:
        key, _, raw = value.partition("=")
        try:
            parameters[key] = json.loads(raw)
        except json.JSONDecodeError:
            parameters[key] = raw
    return parameters


def _without_none(data: dict[str, Any]) -> dict[str, Any]:
    return {key: value for key, value in data.items() if value is not None}


def _execute(
    command: str,
    config_path: Path | None,
    task: dict[str, Any],
    seed: int | None,
    out: Path | None,
    hilbert_constant: bool,
    verbose: bool,
    **blocks: dict[str, Any],
):
    """Merges the configuration file with the flags, runs the command and maps failures to exit codes"""
    _configure_logging(verbose)
    output_dir = out
    try:
        data = json.loads(config_path.read_text(encoding="utf-8")) if config_path else {}
        file_task = data.get("task", {})
        if file_task.get("command", command) != command:
            raise ConfigurationError(text=f"Configuration is for '{file_task['command']}', not '{command}'")
        data["task"] = {**file_task, **_without_none(task), "command": command}
        for name, block in blocks.items():
            if block := _without_none(block):
                data[name] = {**data.get(name, {}), **block}
        if seed is not None:
            data["seed"] = seed
        if out is not None:
            data["output_dir"] = str(out)
        if hilbert_constant:
            data["covering"] = {**data.get("covering", {}), "hilbert_constant": True}
        config = PipelineConfig.model_validate(data)
        output_dir = config.output_dir
        result = run(config)
    except pydantic.ValidationError as exc:
        _fail(EXIT_INVALID, {"error": "ConfigurationError", "text": str(exc)}, output_dir)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_INVALID, {"error": "ConfigurationError", "text": str(exc)}, output_dir)
    except InvalidInputError as exc:
        _fail(EXIT_INVALID, exc.dict(), output_dir)
    except NumericalFailure as exc:
        _fail(EXIT_NUMERICAL, exc.dict(), output_dir)
    except Exception as exc:
        logger.exception(f"Unexpected failure of '{command}'")
        _fail(EXIT_NUMERICAL, {"error": type(exc).__name__, "text": str(exc)}, output_dir)
    echo(dumps(result.report["results"]))


@app.command()
def auerbach(
    norm: str = Option(None, "--norm", help="l1, l2 or linf"),
    dim: int = Option(None, "--dim", help="Dimension m of the ambient space"),
    subspace_dim: int = Option(None, "--subspace-dim", help="Dimension of a random subspace"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Construct an Auerbach basis and its Banach–Mazur certificate."""
    task: dict[str, Any] = {"norm": {"kind": norm, "dimension": dim} if norm else None}
    if subspace_dim is not None:
        task["subspace"] = {"random_dim": subspace_dim}
    _execute("auerbach", config, task, seed, out, hilbert_constant, verbose)


@app.command()
def cover(
    norm: str = Option(None, "--norm", help="l1, l2 or linf"),
    dim: int = Option(None, "--dim", help="Dimension of the covered ball"),
    r: float = Option(None, "--r", help="Radius of the covered ball"),
    rho: float = Option(None, "--rho", help="Radius of the covering balls"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Cover a ball of a subspace and certify the cover."""
    task = {"norm": {"kind": norm, "dimension": dim} if norm else None, "r": r, "rho": rho}
    _execute("cover", config, task, seed, out, hilbert_constant, verbose)


@app.command("nu-lambda")
def nu_lambda_(
    diagonal: str = Option(None, "--diagonal", help="Comma separated diagonal of the compact part C"),
    norm: str = Option("l2", "--norm", help="l1, l2 or linf"),
    lambda_: float = Option(None, "--lambda", help="Threshold λ"),
    with_cover: bool = Option(False, "--cover", help="Also cover the image of the unit ball"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Find ν_λ of a compact-plus-contraction split."""
    task: dict[str, Any] = {"lambda": lambda_, "cover": with_cover or None}
    if (values := _parse_floats(diagonal)) is not None:
        size = len(values)
        task["split"] = {"C": [[v if i == j else 0.0 for j in range(size)] for i, v in enumerate(values)]}
        task["norm"] = {"kind": norm, "dimension": size}
    _execute("nu-lambda", config, task, seed, out, hilbert_constant, verbose)


@app.command()
def bound(
    formula: str = Option(None, "--formula", help="mane, rank_limit or lemma1"),
    n: int = Option(None, "--n", help="Dimension ν of the approximating subspace"),
    D: float = Option(None, "--D", help="Bound of the derivative norms"),
    lambda_: float = Option(None, "--lambda", help="Threshold λ < 1/2"),
    M: float = Option(None, "--M", help="Number of balls (lemma1)"),
    alpha: float = Option(None, "--alpha", help="Contraction factor (lemma1)"),
    field_factor: int = Option(None, "--field-factor", help="1 for real, 2 for complex spaces"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Evaluate a dimension bound formula."""
    task = {"formula": formula, "n": n, "D": D, "lambda": lambda_, "M": M, "alpha": alpha}
    _execute("bound", config, task, seed, out, hilbert_constant, verbose, dimension={"field_factor": field_factor})


@app.command()
def boxcount(
    csv: Path = Option(None, "--csv", help="CSV file with a header row and one point per row"),
    kind: str = Option(None, "--kind", help="points, csv, cantor, sierpinski, square or segment"),
    level: int = Option(None, "--level", help="Construction level of the Cantor set"),
    count: int = Option(None, "--count", help="Number of sampled points"),
    eps0: float = Option(None, "--eps0", help="Largest scale"),
    k_max: int = Option(None, "--k-max", help="Number of halvings of the largest scale"),
    window: int = Option(None, "--window", help="Scales per regression window"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Estimate the box-counting dimension of a point cloud."""
    cloud = _without_none({"kind": "csv" if csv and not kind else kind, "path": csv, "level": level, "count": count})
    dimension = {"eps0": eps0, "k_max": k_max, "window": window}
    task = {"cloud": cloud or None}
    _execute("boxcount", config, task, seed, out, hilbert_constant, verbose, dimension=dimension)


@app.command("simulate")
def simulate_(
    system: str = Option(None, "--system", help="Registered system name"),
    param: list[str] = Option(None, "--param", "-p", help="System parameter key=value, repeatable"),
    x0: str = Option(None, "--x0", help="Comma separated initial state"),
    T: float = Option(None, "--T", help="Final time"),
    dt: float = Option(None, "--dt", help="Step size"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Integrate one trajectory of a system."""
    blocks = {
        "system": {"name": system, "parameters": _parse_parameters(param) or None},
        "sampling": {"dt": dt},
    }
    task = {"x0": _parse_floats(x0), "T": T}
    _execute("simulate", config, task, seed, out, hilbert_constant, verbose, **blocks)


@app.command()
def pipeline(
    system: str = Option(None, "--system", help="Registered system name"),
    param: list[str] = Option(None, "--param", "-p", help="System parameter key=value, repeatable"),
    config: Path = ConfigOption,
    seed: int = SeedOption,
    out: Path = OutOption,
    hilbert_constant: bool = HilbertOption,
    verbose: bool = VerboseOption,
):
    """Sample an attractor, bound its dimension and compare with the box-counting estimate."""
    blocks = {"system": {"name": system, "parameters": _parse_parameters(param) or None}}
    _execute("pipeline", config, {}, seed, out, hilbert_constant, verbose, **blocks)


@app.command()
def examples():
    """List the shipped experiment configurations."""
    for name, data in EXAMPLES.items():
        echo(f"{name:<28} {data['task']['command']:<10} {(EXAMPLE_DIR / f'{name}.json').as_posix()}")


if __name__ == "__main__":
    app()

"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import baselines
from .copula import TiePolicy, rank_transform, read_csv, write_csv
from .datagen import Scenario, sample_scenario, scenario_names
from .errors import CGKDMError, DataError, InvalidDims
from .estimator import estimate
from .experiments import EXPERIMENTS, POWER_SCENARIOS, ExperimentConfig, rows_to_csv, rows_to_json, run_experiment
from .independence import CACHE_ENV, CACHE_FILE, NullMomentCache, run_test

EXIT_DATA = 3
EXIT_NUMERIC = 4


def _positive_sigma(ctx, param, value):
    vals = value if isinstance(value, tuple) else (value,)
    for v in vals:
        if v is not None and not (math.isfinite(v) and v > 0):
            raise click.BadParameter(f"bandwidth must be positive, got {v}")
    return value


def _level(ctx, param, value):
    if not 0.0 < value < 1.0:
        raise click.BadParameter("level must lie in (0, 1)")
    return value


def _positive_int(ctx, param, value):
    if value is not None and value < 1:
        raise click.BadParameter("must be at least 1")
    return value


def _fail(exc: CGKDMError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_DATA if isinstance(exc, DataError) else EXIT_NUMERIC)


def _load(path, ties, seed):
    try:
        return read_csv(path, TiePolicy.JITTER if ties == "jitter" else TiePolicy.ERROR, seed)
    except InvalidDims as exc:
        raise click.UsageError(f"{path}: {exc}")


def _cache(cache_dir):
    if cache_dir is None:
        return None
    return NullMomentCache(Path(cache_dir) / CACHE_FILE)


def _emit(text: str, output):
    if output is None:
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text)


tie_option = click.option(
    "--ties", type=click.Choice(["error", "jitter"]), default="error", show_default=True,
    help="Refuse tied values or break them with seeded jitter.",
)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Copula-based Gaussian kernel dependency measure and independence test."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", type=float, multiple=True, callback=_positive_sigma, help="Bandwidth; repeat for several. Default 1.")
@click.option("--baselines/--no-baselines", "with_baselines", default=True, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for tie jitter.")
@tie_option
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def measure(csv_path, sigma, with_baselines, fmt, seed, ties, output):
    """Estimate the dependency measure of the columns of CSV_PATH."""
    sigmas = sigma or (1.0,)
    try:
        s = _load(csv_path, ties, seed)
        p = rank_transform(s)
        values = [(f"I[sigma={v:g}]", estimate(p, v)) for v in sigmas]
        if with_baselines:
            if s.d == 2:
                for name, f in (("pearson", baselines.pearson), ("spearman", baselines.spearman),
                                ("kendall", baselines.kendall), ("dcor", baselines.dcor)):
                    values.append((name, f(s)))
            else:
                values.append(("spearman_rho2", baselines.mv_spearman_rho2(p)))
    except CGKDMError as exc:
        _fail(exc)
    if fmt == "json":
        text = json.dumps({"n": s.n, "d": s.d, "measures": dict(values)}, indent=2) + "\n"
    else:
        text = "".join(f"{name}\t{val:.6f}\n" for name, val in values)
    _emit(text, output)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", type=float, default=1.0, show_default=True, callback=_positive_sigma)
@click.option("--method", type=click.Choice(["auto", "sim", "gamma-exact", "gamma-asym"]), default="auto", show_default=True)
@click.option("--level", type=float, default=0.05, show_default=True, callback=_level)
@click.option("--reps", type=int, default=None, callback=_positive_int, help="Null replicates.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None, help=f"Null-moment cache directory (env {CACHE_ENV}).")
@click.option("--workers", type=int, default=1, show_default=True, callback=_positive_int)
@tie_option
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def test(csv_path, sigma, method, level, reps, seed, cache_dir, workers, ties, output):
    """Test mutual independence of the columns of CSV_PATH; prints JSON."""
    try:
        s = _load(csv_path, ties, seed)
        rep = run_test(rank_transform(s), sigma, method, level, reps, seed, _cache(cache_dir), workers)
    except CGKDMError as exc:
        _fail(exc)
    _emit(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", output)


@main.command()
@click.argument("experiment_id", type=click.Choice(EXPERIMENTS))
@click.option("--reps", type=int, default=None, callback=_positive_int, help="Replicates per cell.")
@click.option("--full", is_flag=True, help="Use the original replicate counts.")
@click.option("-n", "--n", "n", type=int, multiple=True, help="Sample size(s).")
@click.option("-d", "--d", "d", type=int, multiple=True, help="Dimension(s).")
@click.option("--sigma", type=float, multiple=True, callback=_positive_sigma)
@click.option("--scenario", type=click.Choice(sorted(POWER_SCENARIOS)), multiple=True, help="Power-sweep scenario(s).")
@click.option("--method", type=click.Choice(["sim", "gamma-exact", "gamma-asym"]), default="gamma-exact", show_default=True)
@click.option("--null-reps", type=int, default=None, callback=_positive_int)
@click.option("--level", type=float, default=0.05, show_default=True, callback=_level)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True, callback=_positive_int)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def experiment(experiment_id, reps, full, n, d, sigma, scenario, method, null_reps, level, seed, workers, cache_dir, output, fmt):
    """Run a scripted experiment and write its result rows."""
    try:
        cfg = ExperimentConfig(
            experiment_id, reps, list(n) or None, list(d) or None, list(sigma) or None, level, seed, full,
            list(scenario) or None, method, null_reps, workers, _cache(cache_dir),
        )
        rows = run_experiment(cfg)
    except CGKDMError as exc:
        _fail(exc)
    _emit(rows_to_json(rows, cfg) if fmt == "json" else rows_to_csv(rows), output)


@main.command()
@click.argument("name", type=click.Choice(scenario_names()))
@click.option("-n", "--n", "n", type=int, default=200, show_default=True, callback=_positive_int)
@click.option("-d", "--d", "d", type=int, default=2, show_default=True)
@click.option("--rho", type=float, default=0.0, show_default=True)
@click.option("--dof", type=int, default=3, show_default=True)
@click.option("--signs", type=str, default="", help="Orientation pattern such as '++-'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def dump(name, n, d, rho, dof, signs, seed, output):
    """Write a sample from scenario NAME as CSV."""
    try:
        sc = Scenario(name, d=d, rho=rho, dof=dof, signs=tuple(1 if c == "+" else -1 for c in signs if c in "+-"))
        s = sample_scenario(sc, n, seed)
    except CGKDMError as exc:
        _fail(exc)
    header = [f"x{j + 1}" for j in range(s.d)]
    if output is None:
        click.echo(",".join(header))
        for row in s.data:
            click.echo(",".join(repr(float(v)) for v in row))
    else:
        write_csv(output, s.data, header)


if __name__ == "__main__":
    main()

"""
Grid-convergence and precision studies
"""

import os
from typing import Any, Dict, List, Sequence

import structlog

from ..analysis.diagnostics import (
    GridDifference,
    compare_grids,
    difference_in_high_slope_region,
)
from ..config import LINE_CHOICES, RuntimeConfig
from ..core.integrator import RunResult, run_simulation
from ..experiment import ExperimentConfig
from ..formats import write_difference_csv
from ..utils import ValidationError, validate_choice, validate_positive_float, validate_positive_int
from .common import (
    EXIT_OK,
    EXIT_SOLVER_STOP,
    CommandResult,
    describe,
    output_directory,
    resolve_experiment,
)

logger = structlog.get_logger(__name__)

DEFAULT_PRESET = "example1"
DEFAULT_RESOLUTIONS = (64, 96, 128)
DEFAULT_REFERENCE = 160
DEFAULT_TIME = 1.0


def _source(arguments: Dict[str, Any]) -> Dict[str, Any]:
    if arguments.get("config_path"):
        return {"config_path": arguments["config_path"]}
    return {"preset": arguments.get("preset") or DEFAULT_PRESET}


def _experiment(
    arguments: Dict[str, Any],
    config: RuntimeConfig,
    n: int,
    t: float,
    precision: Any = None,
) -> ExperimentConfig:
    overrides = {"n": n, "t_end": t, "precision": precision or arguments.get("precision")}
    return resolve_experiment({**_source(arguments), **overrides}, config)


def _solve(experiment: ExperimentConfig) -> RunResult:
    logger.info("study_run_started", experiment=describe(experiment))
    return run_simulation(experiment.initial, experiment.params(), experiment.grid())


def _stopped(results: Sequence[RunResult]) -> List[str]:
    return [
        f"N={r.grid.n} {r.params.precision.value}: {r.stop_reason.value} at t = {r.stop_time:.6g}"
        for r in results
        if r.stop_reason.is_solver_stop
    ]


def _difference_line(label: str, diff: GridDifference) -> str:
    steep = difference_in_high_slope_region(diff)
    return f"{label}: max|diff| = {diff.max_norm:.6e}  peak at steepest slope: {steep}"


def handle_compare(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    Compare line profiles across resolutions or precisions

    Args:
        arguments: {
            "preset": str (optional, default example1),
            "config_path": str (optional),
            "resolutions": List[int] (optional, default [64, 96, 128]),
            "reference": int (optional, default 160),
            "time": float (optional, default 1),
            "line": str (optional, default midline_x),
            "precision_study": bool (optional),
            "n": int (precision study resolution, default RuntimeConfig.default_n),
            "output_dir": str (optional)
        }
        config: Runtime configuration

    Returns:
        Report text; exit code 2 if any run stopped early
    """
    t = validate_positive_float(float(arguments.get("time") or DEFAULT_TIME), "time")
    which = validate_choice(arguments.get("line") or "midline_x", "line", LINE_CHOICES)

    if arguments.get("precision_study"):
        return _precision_study(arguments, config, t, which)

    resolutions = sorted(
        validate_positive_int(n, "resolution")
        for n in (arguments.get("resolutions") or DEFAULT_RESOLUTIONS)
    )
    reference_n = validate_positive_int(
        arguments.get("reference") or DEFAULT_REFERENCE, "reference"
    )
    if len(set(resolutions)) != len(resolutions) or resolutions[-1] >= reference_n:
        raise ValidationError(
            f"Resolutions {resolutions} must be distinct and below the reference {reference_n}"
        )

    reference_experiment = _experiment(arguments, config, reference_n, t)
    directory = os.path.join(
        arguments.get("output_dir") or output_directory(reference_experiment, config, "custom"),
        "compare",
    )
    reference = _solve(reference_experiment)
    results = [_solve(_experiment(arguments, config, n, t)) for n in resolutions]

    stopped = _stopped([reference, *results])
    if stopped:
        return CommandResult("❌ Runs stopped before t:\n" + "\n".join(stopped), EXIT_SOLVER_STOP)

    texts = [describe(reference_experiment, "reference"), f"Line {which} at t = {t:g}"]
    norms = []
    for result in results:
        diff = compare_grids(result, reference, which)
        norms.append(diff.max_norm)
        write_difference_csv(
            diff, os.path.join(directory, f"{which}_n{result.grid.n}_vs_n{reference_n}.csv")
        )
        texts.append(_difference_line(f"N={result.grid.n} vs N={reference_n}", diff))

    decreasing = all(a > b for a, b in zip(norms, norms[1:]))
    marker = "✅" if decreasing else "❌"
    texts.append(f"{marker} Differences strictly decrease with N: {decreasing}")
    texts.append(f"Outputs: {directory}")
    logger.info("grid_study_finished", norms=norms, decreasing=decreasing)
    return CommandResult("\n".join(texts), EXIT_OK)


def _precision_study(
    arguments: Dict[str, Any],
    config: RuntimeConfig,
    t: float,
    which: str,
) -> CommandResult:
    n = validate_positive_int(arguments.get("n") or config.default_n, "n")
    double = _experiment(arguments, config, n, t, precision="double")
    single = _experiment(arguments, config, n, t, precision="single")
    directory = os.path.join(
        arguments.get("output_dir") or output_directory(double, config, "custom"), "compare"
    )

    results = [_solve(double), _solve(single)]
    stopped = _stopped(results)
    if stopped:
        return CommandResult("❌ Runs stopped before t:\n" + "\n".join(stopped), EXIT_SOLVER_STOP)

    diff = compare_grids(results[1], results[0], which)
    write_difference_csv(diff, os.path.join(directory, f"{which}_n{n}_single_vs_double.csv"))
    texts = [
        describe(double, "precision study"),
        f"Line {which} at t = {t:g}",
        _difference_line("single vs double", diff),
        f"Outputs: {directory}",
    ]
    logger.info("precision_study_finished", n=n, max_norm=diff.max_norm)
    return CommandResult("\n".join(texts), EXIT_OK)

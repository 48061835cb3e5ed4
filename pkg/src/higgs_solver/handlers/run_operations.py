"""
Simulation run handlers: run, resume, radial
"""

import dataclasses
import os
from typing import Any, Dict, List, Optional

import numpy as np
import structlog

from ..analysis.diagnostics import (
    DiagnosticsRecord,
    LineSeries,
    extract_line,
    radial_midline_discrepancy,
)
from ..config import RuntimeConfig
from ..core.field import FieldState, Geometry
from ..core.integrator import RunResult, StopReason, run_simulation
from ..experiment import ExperimentConfig, load_config
from ..formats import (
    DiagnosticsCsvWriter,
    MonitorCsvWriter,
    load_checkpoint,
    read_checkpoint_header,
    save_checkpoint,
    write_line_csv,
    write_volume,
)
from ..utils import ValidationError, format_duration, time_tag
from .common import (
    EXIT_OK,
    EXIT_SOLVER_STOP,
    CommandResult,
    describe,
    output_directory,
    read_text,
    resolve_experiment,
    save_experiment,
)

logger = structlog.get_logger(__name__)

CHECKPOINT_FILE = "checkpoint.bin"
STOP_STATE_FILE = "stop_state.bin"
DIAGNOSTICS_FILE = "diagnostics.csv"
MONITORS_FILE = "monitors.csv"


class RunOutputs:
    """Diagnostic hook writing CSV rows, lines, volumes and checkpoints"""

    def __init__(
        self,
        experiment: ExperimentConfig,
        directory: str,
        volume_binary: bool,
        fresh: bool,
    ):
        self.experiment = experiment
        self.grid = experiment.grid()
        self.params = experiment.params()
        self.directory = directory
        self.volume_binary = volume_binary
        self.samples = 0
        self.written: List[str] = []

        if fresh:
            for name in (DIAGNOSTICS_FILE, MONITORS_FILE):
                path = os.path.join(directory, name)
                if os.path.exists(path):
                    os.remove(path)
        self.diagnostics = DiagnosticsCsvWriter(os.path.join(directory, DIAGNOSTICS_FILE)).open()
        self.monitors = MonitorCsvWriter(os.path.join(directory, MONITORS_FILE)).open()

    def _due(self, t: float, times: tuple) -> bool:
        return any(abs(t - target) < 0.5 * self.params.dt for target in times)

    def _write_lines(self, state: FieldState) -> None:
        for which in self.experiment.lines:
            if self.grid.is_radial:
                line = LineSeries(
                    "radial",
                    state.t,
                    self.grid.n,
                    self.grid.coordinates(),
                    state.v1.astype(np.float64),
                )
                name = f"radial_{time_tag(state.t)}.csv"
            else:
                line = extract_line(state, self.grid, which)
                name = f"{which}_{time_tag(state.t)}.csv"
            path = os.path.join(self.directory, "lines", name)
            write_line_csv(line, path)
            self.written.append(path)
            if self.grid.is_radial:
                break

    def __call__(self, record: DiagnosticsRecord, state: FieldState) -> None:
        self.samples += 1
        self.diagnostics.write(record)
        self.monitors.write(record)

        if self._due(state.t, self.experiment.line_times):
            self._write_lines(state)
        if self._due(state.t, self.experiment.volume_times):
            path = os.path.join(self.directory, "volumes", f"phi_{time_tag(state.t)}.vtk")
            title = f"phi t={state.t:.6g}"
            write_volume(state, self.grid, path, binary=self.volume_binary, title=title)
            self.written.append(path)

        every = self.experiment.checkpoint_every
        if every and self.samples % every == 0:
            save_checkpoint(state, self.grid, os.path.join(self.directory, CHECKPOINT_FILE))

    def close(self) -> None:
        self.diagnostics.close()
        self.monitors.close()


def execute_experiment(
    experiment: ExperimentConfig,
    config: RuntimeConfig,
    directory: str,
    start_state: Optional[FieldState] = None,
) -> RunResult:
    """
    Run an experiment writing all of its outputs under ``directory``

    On a solver stop the final state is written to stop_state.bin.
    """
    os.makedirs(directory, exist_ok=True)
    if start_state is None:
        save_experiment(experiment, directory)

    outputs = RunOutputs(experiment, directory, config.volume_binary, fresh=start_state is None)
    try:
        result = run_simulation(
            experiment.initial,
            experiment.params(),
            experiment.grid(),
            hooks=[outputs],
            start_state=start_state,
            snapshot_times=experiment.snapshot_times(),
        )
    finally:
        outputs.close()

    if result.stop_reason.is_solver_stop:
        save_checkpoint(result.final_state, result.grid, os.path.join(directory, STOP_STATE_FILE))
    elif experiment.checkpoint_every:
        save_checkpoint(result.final_state, result.grid, os.path.join(directory, CHECKPOINT_FILE))
    return result


def summarize(result: RunResult, directory: str) -> str:
    lines = []
    if result.stop_reason is StopReason.COMPLETED:
        lines.append(f"✅ Run completed at t = {result.stop_time:.6g}")
    else:
        lines.append(f"❌ Solver stop: {result.stop_reason.value} at t = {result.stop_time:.6g}")
        if result.stop_message:
            lines.append(f"   {result.stop_message}")
    lines.append(
        f"Steps: {result.steps}  Samples: {len(result.records)}  "
        f"Wall time: {format_duration(result.elapsed)}"
    )

    if result.records:
        last = result.records[-1]
        lines.append(
            f"Last sample t = {last.t:.6g}: max|phi| = {last.max_abs_phi:.6g}, "
            f"integral = {last.integral_phi:.6g}, P = {last.P:.6g}, bubbles = {last.bubble_count}"
        )
    if result.cubic_violation_time is not None:
        lines.append(f"Integral of phi^3 first negative at t = {result.cubic_violation_time:.6g}")
    lines.append(f"Outputs: {directory}")
    return "\n".join(lines)


def _exit_code(result: RunResult) -> int:
    return EXIT_SOLVER_STOP if result.stop_reason.is_solver_stop else EXIT_OK


def handle_run(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    Run an experiment end to end

    Args:
        arguments: {
            "preset": str (optional),
            "config_path": str (optional),
            overrides as accepted by resolve_experiment
        }
        config: Runtime configuration

    Returns:
        Summary text and exit code (2 on a solver stop)
    """
    experiment = resolve_experiment(arguments, config)
    directory = output_directory(experiment, config, "custom")
    logger.info("run_requested", experiment=describe(experiment), output_dir=directory)

    result = execute_experiment(experiment, config, directory)
    text = describe(experiment) + "\n" + summarize(result, directory)
    return CommandResult(text, _exit_code(result))


def handle_resume(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    Continue a run from its checkpoint

    Args:
        arguments: {
            "run_dir": str,
            "checkpoint": str (optional, default run_dir/checkpoint.bin),
            "t_end": float (optional, new final time)
        }
        config: Runtime configuration
    """
    run_dir = arguments["run_dir"]
    experiment = load_config(read_text(os.path.join(run_dir, "config.yaml")), config.default_n)
    if arguments.get("t_end") is not None:
        experiment = dataclasses.replace(
            experiment,
            t_end=float(arguments["t_end"]),
            output_dir=run_dir,
        )
        experiment.params()

    checkpoint = arguments.get("checkpoint") or os.path.join(run_dir, CHECKPOINT_FILE)
    header = read_checkpoint_header(checkpoint)
    if header.grid != experiment.grid():
        raise ValidationError(
            f"Checkpoint grid (N={header.n}, {header.geometry.value}, L={header.scaling:g}) "
            f"does not match the run config (N={experiment.n}, {experiment.geometry.value}, "
            f"L={experiment.scaling:g})"
        )
    state = load_checkpoint(checkpoint, precision=experiment.precision)
    params = experiment.params()
    if int(round(state.t / params.dt)) >= params.n_steps:
        raise ValidationError(
            f"Checkpoint time {state.t:g} is not before t_end {experiment.t_end:g}"
        )
    if arguments.get("t_end") is not None:
        save_experiment(experiment, run_dir)

    logger.info("resume_requested", checkpoint=checkpoint, t=state.t, t_end=experiment.t_end)
    result = execute_experiment(experiment, config, run_dir, start_state=state)
    text = f"Resumed from t = {state.t:.6g}\n" + summarize(result, run_dir)
    return CommandResult(text, _exit_code(result))


def handle_radial(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    Run an experiment in radial geometry, optionally against the 3D run

    Args:
        arguments: {
            "preset": str, "config_path": str (one of them),
            "compare_3d": bool (optional),
            overrides as accepted by resolve_experiment
        }
        config: Runtime configuration
    """
    cube = resolve_experiment({**arguments, "geometry": None}, config)
    radial = resolve_experiment({**arguments, "geometry": Geometry.RADIAL1D.value}, config)
    base = output_directory(cube, config, "custom")

    radial_result = execute_experiment(radial, config, os.path.join(base, "radial"))
    texts = [describe(radial, "radial"), summarize(radial_result, os.path.join(base, "radial"))]
    exit_code = _exit_code(radial_result)

    if arguments.get("compare_3d"):
        if cube.geometry is not Geometry.CUBE3D:
            raise ValidationError("--compare-3d needs a cube3d experiment")
        cube_result = execute_experiment(cube, config, os.path.join(base, "cube"))
        texts += [describe(cube, "cube"), summarize(cube_result, os.path.join(base, "cube"))]
        exit_code = max(exit_code, _exit_code(cube_result))

        if not (radial_result.stop_reason.is_solver_stop or cube_result.stop_reason.is_solver_stop):
            discrepancy = radial_midline_discrepancy(
                cube_result.final_state,
                cube_result.grid,
                radial_result.final_state,
                radial_result.grid,
            )
            texts.append(
                f"Mid-line vs radial max difference at t = {cube_result.stop_time:.6g}: "
                f"{discrepancy:.6e}"
            )
            logger.info("radial_comparison", discrepancy=discrepancy)

    return CommandResult("\n".join(texts), exit_code)

"""
Time integration of the first-order system

v1' = v2
v2' = mu2 v1 - lam v1^3 - 3 v2 + (exp(-2t) / L^2) Laplacian(v1)

advanced with classical RK4, guarded against blow-up, CFL violation and the
field reaching the stencil halo.
"""

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
import structlog

from ..analysis.diagnostics import DiagnosticsRecord, collect_diagnostics
from ..config import (
    DAMPING,
    DEFAULT_BLOWUP_THRESHOLD,
    DEFAULT_HALO_TOLERANCE,
    DEFAULT_RESOLVED_FRACTION,
    DEFAULT_ZERO_FRACTION,
    DT_PER_DX,
    HALO_WIDTH,
    CFL_POLICIES,
)
from ..utils import (
    NonFiniteError,
    ValidationError,
    format_duration,
    get_stop_reasons,
    require_finite,
    validate_choice,
    validate_finite,
    validate_non_negative_float,
    validate_positive_float,
    validate_positive_int,
)
from .field import FieldState, GridSpec, InitialData, Precision, build_initial
from .runge_kutta import StepWorkspace, rk4_advance
from .stencils import StencilCoefficients, rhs_kernel_3d, rhs_kernel_radial

logger = structlog.get_logger(__name__)

DiagnosticsHook = Callable[[DiagnosticsRecord, FieldState], None]


class StopReason(str, Enum):
    """Why a run ended"""

    COMPLETED = "completed"
    BLOW_UP = "blow_up"
    CFL_VIOLATION = "cfl_violation"
    HALO_REACHED = "halo_reached"

    @property
    def is_solver_stop(self) -> bool:
        return self is not StopReason.COMPLETED


@dataclass(frozen=True)
class SimParams:
    """
    Physics and numerics of a run

    mu2 and lam may take any real value (negative lam gives the tachyonic,
    blow-up regime). The scaling L belongs to the grid.
    """

    mu2: float
    lam: float
    dt: float
    t_end: float
    sample_every: int = 1
    precision: Precision = Precision.DOUBLE
    cfl_policy: str = "stop"
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    halo_tolerance: float = DEFAULT_HALO_TOLERANCE
    zero_fraction: float = DEFAULT_ZERO_FRACTION
    resolved_fraction: float = DEFAULT_RESOLVED_FRACTION

    def __post_init__(self) -> None:
        validate_finite(self.mu2, "mu2")
        validate_finite(self.lam, "lambda")
        validate_positive_float(self.dt, "dt")
        validate_positive_float(self.t_end, "t_end")
        validate_positive_int(self.sample_every, "sample_every")
        validate_positive_float(self.blowup_threshold, "blowup_threshold")
        validate_positive_float(self.halo_tolerance, "halo_tolerance")
        validate_non_negative_float(self.zero_fraction, "zero_fraction")
        validate_non_negative_float(self.resolved_fraction, "resolved_fraction")
        object.__setattr__(self, "precision", Precision(self.precision))
        object.__setattr__(
            self, "cfl_policy", validate_choice(self.cfl_policy, "cfl_policy", CFL_POLICIES)
        )

    @classmethod
    def for_grid(
        cls,
        grid: GridSpec,
        mu2: float,
        lam: float,
        t_end: float,
        dt: Optional[float] = None,
        **kwargs: Any,
    ) -> "SimParams":
        """Parameters with the default step dt = dx / 20 unless dt is given"""
        step = default_dt(grid) if dt is None else dt
        return cls(mu2, lam, step, t_end, **kwargs)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class CflStatus:
    """Outcome of the field-magnitude CFL check"""

    passed: bool
    bound: float
    observed: float


@dataclass
class RunResult:
    """Outcome of run_simulation"""

    final_state: FieldState
    stop_reason: StopReason
    stop_time: float
    steps: int
    records: List[DiagnosticsRecord]
    grid: GridSpec
    params: SimParams
    initial: Optional[InitialData] = None
    stop_message: Optional[str] = None
    cubic_violation_time: Optional[float] = None
    elapsed: float = 0.0

    def series(self, name: str) -> np.ndarray:
        """One diagnostics column as an array, e.g. series("max_abs_phi")"""
        return np.array([getattr(record, name) for record in self.records], dtype=np.float64)


def default_dt(grid: GridSpec) -> float:
    return grid.dx * DT_PER_DX


def _require_matching(state: FieldState, grid: GridSpec) -> None:
    if not state.matches(grid):
        raise ValidationError(
            f"State extents {state.data.shape[1:]} do not match grid {grid.shape}"
        )


def evaluate_rhs(t: float, values: np.ndarray, params: SimParams, grid: GridSpec) -> np.ndarray:
    """
    Right-hand side of the first-order system for raw (2, ...) values

    Raises:
        NonFiniteError: If any output entry is NaN or Inf
    """
    values = np.ascontiguousarray(values)
    out = np.zeros_like(values)
    coef = math.exp(-2.0 * t) / (grid.scaling * grid.scaling)
    if grid.is_radial:
        rhs_kernel_radial(values[0], values[1], out, params.mu2, params.lam, DAMPING, coef, grid.dx)
    else:
        inv_dx2 = StencilCoefficients.for_grid(grid).inv_spacing2
        rhs_kernel_3d(values[0], values[1], out, params.mu2, params.lam, DAMPING, coef, inv_dx2)
    require_finite(out, "rhs")
    return out


def rhs(t: float, state: FieldState, params: SimParams, grid: GridSpec) -> np.ndarray:
    """
    (f1, f2) for a state; boundary entries of both components are 0

    Raises:
        ValidationError: If the state does not match the grid
        NonFiniteError: If any output entry is NaN or Inf
    """
    _require_matching(state, grid)
    return evaluate_rhs(t, state.data, params, grid)


def rk4_step(
    t: float,
    state: FieldState,
    params: SimParams,
    grid: GridSpec,
    workspace: Optional[StepWorkspace] = None,
    t_next: Optional[float] = None,
) -> FieldState:
    """
    Advance a state by params.dt with the register-reuse RK4 scheme

    Args:
        t: Time of the state
        state: Current state
        params: Run parameters
        grid: Lattice
        workspace: Stage arrays (allocated when omitted)
        t_next: Time stamp for the new state (defaults to t + dt)

    Returns:
        New FieldState

    Raises:
        ValidationError: If the workspace extents do not match the state
        NonFiniteError: Propagated from the right-hand side
    """
    _require_matching(state, grid)
    if workspace is None:
        workspace = StepWorkspace.like(state.data)

    def f(stage_t: float, values: np.ndarray) -> np.ndarray:
        return evaluate_rhs(stage_t, values, params, grid)

    values = rk4_advance(f, t, state.data, params.dt, workspace)
    return FieldState(values, t + params.dt if t_next is None else t_next)


def cfl_check(state: FieldState, grid: GridSpec, params: SimParams) -> CflStatus:
    """
    Compare max|phi| with the bound dx / (sqrt(3) dt)

    A non-finite field fails the check.
    """
    bound = grid.dx / (math.sqrt(3.0) * params.dt)
    observed = float(np.max(np.abs(state.v1))) if state.v1.size else 0.0
    passed = math.isfinite(observed) and observed < bound
    return CflStatus(passed, bound, observed)


def _sample(state: FieldState, grid: GridSpec, params: SimParams) -> DiagnosticsRecord:
    return collect_diagnostics(
        state,
        grid,
        cfl_passed=cfl_check(state, grid, params).passed,
        zero_fraction=params.zero_fraction,
        resolved_fraction=params.resolved_fraction,
    )


def run_simulation(
    initial: Optional[InitialData],
    params: SimParams,
    grid: GridSpec,
    hooks: Sequence[DiagnosticsHook] = (),
    start_state: Optional[FieldState] = None,
    snapshot_times: Sequence[float] = (),
) -> RunResult:
    """
    Integrate from the initial data (or a resumed state) to t_end

    Diagnostics are sampled every params.sample_every steps and at the last
    state; each sample is passed to every hook together with the state.
    Solver stops are reported in RunResult.stop_reason, never raised.

    Args:
        initial: Initial data recipe (may be None when resuming)
        params: Run parameters
        grid: Lattice
        hooks: Diagnostic sinks called as hook(record, state)
        start_state: State to resume from instead of building initial data
        snapshot_times: Extra times at which a sample is forced

    Returns:
        RunResult
    """
    if start_state is None:
        if initial is None:
            raise ValidationError("Either initial data or a start state is required")
        state = build_initial(initial, grid, params.precision.dtype)
    else:
        if not start_state.matches(grid):
            raise ValidationError(
                f"Start state extents {start_state.data.shape[1:]} do not match grid {grid.shape}"
            )
        if start_state.dtype != params.precision.dtype:
            raise ValidationError(
                f"Start state is {start_state.dtype}, run precision is {params.precision.value}"
            )
        state = start_state

    step = int(round(state.t / params.dt))
    total = params.n_steps
    cfl_bound = grid.dx / (math.sqrt(3.0) * params.dt)
    workspace = StepWorkspace.like(state.data)
    snapshot_steps = {int(round(t / params.dt)) for t in snapshot_times}
    records: List[DiagnosticsRecord] = []
    sampled_step = -1
    cfl_warned = False
    stop_reason = StopReason.COMPLETED
    stop_message: Optional[str] = None
    cubic_violation_time: Optional[float] = None

    def sample(current: FieldState, at_step: int) -> None:
        nonlocal sampled_step, cubic_violation_time
        record = _sample(current, grid, params)
        records.append(record)
        sampled_step = at_step
        if cubic_violation_time is None and record.integral_phi_cubed < 0.0:
            cubic_violation_time = record.t
        logger.debug(
            "diagnostics_sample",
            t=record.t,
            max_abs_phi=record.max_abs_phi,
            bubble_count=record.bubbles.count,
        )
        for hook in hooks:
            hook(record, current)

    logger.info(
        "run_started",
        geometry=grid.geometry.value,
        n=grid.n,
        dt=params.dt,
        t_end=params.t_end,
        steps=total - step,
        precision=params.precision.value,
    )
    started = time.perf_counter()

    previous = state
    stop_time = state.t
    while True:
        observed = float(np.max(np.abs(state.v1)))
        reasons = dict(
            get_stop_reasons(
                state.v1,
                max_abs=observed,
                cfl_bound=cfl_bound,
                blowup_threshold=params.blowup_threshold,
                halo_width=HALO_WIDTH,
                halo_tolerance=params.halo_tolerance,
            )
        )
        if "blow_up" in reasons:
            stop_reason, stop_message = StopReason.BLOW_UP, reasons["blow_up"]
        elif "halo_reached" in reasons:
            stop_reason, stop_message = StopReason.HALO_REACHED, reasons["halo_reached"]
        elif "cfl_violation" in reasons:
            if params.cfl_policy == "stop":
                stop_reason, stop_message = StopReason.CFL_VIOLATION, reasons["cfl_violation"]
            elif not cfl_warned:
                logger.warning("cfl_violation", t=state.t, message=reasons["cfl_violation"])
                cfl_warned = True

        stop_time = state.t
        if not math.isfinite(observed):
            # The result keeps the last finite state.
            state = FieldState(previous.data, previous.t, blown_up=True)
            if sampled_step != step - 1:
                sample(state, step - 1)
            break

        stopping = stop_reason.is_solver_stop or step >= total
        if step % params.sample_every == 0 or step in snapshot_steps or stopping:
            sample(state, step)
        if stopping:
            if stop_reason is StopReason.BLOW_UP:
                state = FieldState(state.data, state.t, blown_up=True)
            break

        previous = state
        try:
            state = rk4_step(state.t, state, params, grid, workspace, t_next=(step + 1) * params.dt)
        except NonFiniteError as e:
            stop_reason, stop_message = StopReason.BLOW_UP, str(e)
            stop_time = (step + 1) * params.dt
            if sampled_step != step:
                sample(state, step)
            state = FieldState(state.data, state.t, blown_up=True)
            break
        step += 1

    elapsed = time.perf_counter() - started
    log = logger.info if stop_reason is StopReason.COMPLETED else logger.warning
    log(
        "run_finished",
        stop_reason=stop_reason.value,
        stop_time=stop_time,
        steps=step,
        elapsed=format_duration(elapsed),
        message=stop_message,
    )
    return RunResult(
        final_state=state,
        stop_reason=stop_reason,
        stop_time=stop_time,
        steps=step,
        records=records,
        grid=grid,
        params=params,
        initial=initial,
        stop_message=stop_message,
        cubic_violation_time=cubic_violation_time,
        elapsed=elapsed,
    )

"""
The unforced, damped Duffing system phi'' + 3 phi' = mu2 phi - lam phi^3

Reference dynamics for the pointwise large-time behavior of the field:
equilibria, trajectories, basin labels over sample sets, and the a priori
bubble condition on initial data.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..config import DAMPING, DUFFING_PROXIMITY, DUFFING_T_MAX, SPACE_DIMENSIONS
from ..core.field import GridSpec, InitialData, build_initial
from ..core.runge_kutta import StepWorkspace, rk4_advance
from ..utils import ValidationError, require_finite, validate_positive_float
from .diagnostics import integral_phi_cubed

logger = structlog.get_logger(__name__)

DEFAULT_DUFFING_DT = 1.0e-3
CHECK_EVERY = 100


class InvalidParamsError(ValidationError):
    """Raised for Duffing parameters without two stable equilibria"""
    pass


class BasinLabel(str, Enum):
    STABLE_POS = "stable_pos"
    STABLE_NEG = "stable_neg"
    UNSTABLE_ZERO = "unstable_zero"
    UNDECIDED = "undecided"

    def flipped(self) -> "BasinLabel":
        if self is BasinLabel.STABLE_POS:
            return BasinLabel.STABLE_NEG
        if self is BasinLabel.STABLE_NEG:
            return BasinLabel.STABLE_POS
        return self


@dataclass(frozen=True)
class DuffingParams:
    mu2: float
    lam: float
    damping: float = DAMPING

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu2) and self.mu2 > 0.0):
            raise InvalidParamsError(f"mu2 must be positive, got {self.mu2}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidParamsError(f"lambda must be positive, got {self.lam}")


class Equilibria(NamedTuple):
    stable_pos: float
    stable_neg: float
    unstable_zero: float


@dataclass(frozen=True)
class DuffingTrajectory:
    """Sampled trajectory and its terminal label"""

    times: np.ndarray
    values: np.ndarray  # (len(times), 2): phi, phi_t
    label: BasinLabel

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


@dataclass(frozen=True)
class PhasePortrait:
    """Basin labels for a set of (phi, phi_t) samples"""

    samples: np.ndarray  # (M, 2)
    labels: Tuple[BasinLabel, ...]

    def counts(self) -> dict:
        return {label.value: self.labels.count(label) for label in BasinLabel}


@dataclass(frozen=True)
class BubblePredicateInput:
    data: InitialData
    mu2: float
    n_dim: int = SPACE_DIMENSIONS

    def __post_init__(self) -> None:
        if self.n_dim != SPACE_DIMENSIONS:
            raise ValidationError(f"n_dim must be {SPACE_DIMENSIONS}, got {self.n_dim}")
        if self.n_dim * self.n_dim / 4.0 + self.mu2 < 0.0:
            raise ValidationError(f"mu2 = {self.mu2} makes the bubble coefficient complex")

    @property
    def coefficient(self) -> float:
        return self.n_dim / 2.0 + math.sqrt(self.n_dim * self.n_dim / 4.0 + self.mu2)


@dataclass(frozen=True)
class PredicateResult:
    """
    Outcome of the a priori bubble condition

    ``witness`` is a lattice index where the condition fails, or None when
    it holds on the whole support (or the support is empty).
    """

    satisfied: bool
    coefficient: float
    support_nodes: int
    witness: Optional[Tuple[int, ...]]
    witness_point: Optional[Tuple[float, ...]]
    integral_phi_cubed: float


def equilibria(params: DuffingParams) -> Equilibria:
    """(+sqrt(mu2/lam), -sqrt(mu2/lam), 0)"""
    root = math.sqrt(params.mu2 / params.lam)
    return Equilibria(root, -root, 0.0)


def duffing_rhs(y: np.ndarray, params: DuffingParams) -> np.ndarray:
    """Right-hand side for a (2, ...) array of (phi, phi_t)"""
    phi, v = y[0], y[1]
    return np.stack([v, params.mu2 * phi - params.lam * phi * phi * phi - params.damping * v])


def _nearest_labels(y: np.ndarray, params: DuffingParams, proximity: float) -> np.ndarray:
    """Per-column label index: 0 pos, 1 neg, 2 zero, 3 none within proximity"""
    eq = equilibria(params)
    labels = np.full(y.shape[1], 3, dtype=np.int8)
    for code, value in ((2, eq.unstable_zero), (1, eq.stable_neg), (0, eq.stable_pos)):
        distance = np.hypot(y[0] - value, y[1])
        labels[distance < proximity] = code
    return labels


_LABEL_CODES = (
    BasinLabel.STABLE_POS,
    BasinLabel.STABLE_NEG,
    BasinLabel.UNSTABLE_ZERO,
    BasinLabel.UNDECIDED,
)


def _classify_batch(
    y0: np.ndarray,
    params: DuffingParams,
    dt: float,
    t_max: float,
    proximity: float,
) -> np.ndarray:
    """
    Integrate many initial points at once and return label codes

    Columns settle when they come within proximity of a stable equilibrium,
    or when they sit exactly at the origin (a fixed point); the rest run to
    t_max and are labeled by proximity there.
    """
    codes = np.full(y0.shape[1], 3, dtype=np.int8)
    active = np.arange(y0.shape[1])
    y = np.array(y0, dtype=np.float64)
    steps = int(round(t_max / dt))

    def f(_t: float, values: np.ndarray) -> np.ndarray:
        return duffing_rhs(values, params)

    workspace = StepWorkspace.like(y)
    step = 0
    while active.size:
        if step % CHECK_EVERY == 0 or step == steps:
            near = _nearest_labels(y, params, proximity)
            at_origin = (y[0] == 0.0) & (y[1] == 0.0)
            settled = (near <= 1) | at_origin
            if step == steps:
                settled[:] = True
            codes[active[settled]] = near[settled]
            active = active[~settled]
            y = y[:, ~settled]
            if not active.size:
                break
            workspace = StepWorkspace.like(y)

        y = rk4_advance(f, step * dt, y, dt, workspace)
        require_finite(y, "duffing trajectory")
        step += 1
    return codes


def integrate_duffing(
    y0: Sequence[float],
    params: DuffingParams,
    dt: float = DEFAULT_DUFFING_DT,
    t_max: float = DUFFING_T_MAX,
    proximity: float = DUFFING_PROXIMITY,
    stop_when_settled: bool = True,
) -> DuffingTrajectory:
    """
    RK4 trajectory from (phi, phi_t) with its terminal classification

    The label is the equilibrium the trajectory is within ``proximity`` of
    when it terminates, or UNDECIDED if none is near at t_max. With
    stop_when_settled the integration ends once a stable equilibrium is
    reached.

    Raises:
        NonFiniteError: If the trajectory overflows
    """
    validate_positive_float(dt, "dt")
    validate_positive_float(t_max, "t_max")
    y = np.asarray(y0, dtype=np.float64).reshape(2, 1)
    steps = int(round(t_max / dt))

    def f(_t: float, values: np.ndarray) -> np.ndarray:
        return duffing_rhs(values, params)

    workspace = StepWorkspace.like(y)
    times = [0.0]
    values = [y[:, 0].copy()]
    step = 0
    while step < steps:
        if stop_when_settled and _nearest_labels(y, params, proximity)[0] <= 1:
            break
        y = rk4_advance(f, step * dt, y, dt, workspace)
        require_finite(y, "duffing trajectory")
        step += 1
        times.append(step * dt)
        values.append(y[:, 0].copy())

    label = _LABEL_CODES[int(_nearest_labels(y, params, proximity)[0])]
    return DuffingTrajectory(np.array(times), np.array(values), label)


def phase_portrait(
    params: DuffingParams,
    samples: np.ndarray,
    dt: float = DEFAULT_DUFFING_DT,
    t_max: float = DUFFING_T_MAX,
    proximity: float = DUFFING_PROXIMITY,
) -> PhasePortrait:
    """
    Basin label for every (phi, phi_t) sample

    Args:
        params: Duffing parameters
        samples: Array of shape (M, 2)

    Returns:
        PhasePortrait
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    codes = _classify_batch(samples.T, params, dt, t_max, proximity)
    labels = tuple(_LABEL_CODES[int(c)] for c in codes)
    logger.debug("phase_portrait", samples=len(samples), **PhasePortrait(samples, labels).counts())
    return PhasePortrait(samples, labels)


def portrait_grid(low: float, high: float, count: int) -> np.ndarray:
    """count x count samples over [low, high]^2, shape (count^2, 2)"""
    axis = np.linspace(low, high, count)
    phi, phi_t = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([phi.ravel(), phi_t.ravel()])


def curve_classification(
    initial: InitialData,
    grid: GridSpec,
    params: DuffingParams,
    dt: float = DEFAULT_DUFFING_DT,
    t_max: float = DUFFING_T_MAX,
) -> PhasePortrait:
    """Labels of the curve (phi0, phi1) along the x mid-line of the initial data"""
    state = build_initial(initial, grid)
    half = grid.n // 2
    if grid.is_radial:
        phi0, phi1 = state.v1, state.v2
    else:
        phi0, phi1 = state.v1[:, half, half], state.v2[:, half, half]
    samples = np.column_stack([phi0, phi1])
    return phase_portrait(params, samples, dt=dt, t_max=t_max)


def bubble_predicate(predicate_input: BubblePredicateInput, grid: GridSpec) -> PredicateResult:
    """
    Check (n/2 + sqrt(n^2/4 + mu2)) phi0 + phi1 < 0 on the support of the data

    The support is the set of nodes where phi0 or phi1 is nonzero. Also
    reports the t = 0 value of the integral of phi^3.
    """
    state = build_initial(predicate_input.data, grid)
    phi0 = state.v1.astype(np.float64)
    phi1 = state.v2.astype(np.float64)
    coefficient = predicate_input.coefficient

    support = (phi0 != 0.0) | (phi1 != 0.0)
    condition = coefficient * phi0 + phi1
    failing = support & ~(condition < 0.0)
    cubic = integral_phi_cubed(state, grid)
    support_nodes = int(np.count_nonzero(support))

    if support_nodes == 0:
        return PredicateResult(False, coefficient, 0, None, None, cubic)
    if not failing.any():
        return PredicateResult(True, coefficient, support_nodes, None, None, cubic)

    masked = np.where(failing, condition, -np.inf)
    witness = tuple(int(i) for i in np.unravel_index(int(np.argmax(masked)), condition.shape))
    point = tuple(float(i * grid.dx) for i in witness)
    return PredicateResult(False, coefficient, support_nodes, witness, point, cubic)

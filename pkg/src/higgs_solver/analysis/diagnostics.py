"""
Diagnostics over field snapshots

Integrals, the smoothness monitor P(t), the bubble census, line extraction
and line comparison between runs. Every function reads a snapshot and
allocates its own output.
"""

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
import structlog
from scipy import ndimage

from ..config import DEFAULT_RESOLVED_FRACTION, DEFAULT_ZERO_FRACTION, LINE_CHOICES
from ..core.field import FieldState, Geometry, GridSpec
from ..core.stencils import spatial_operator
from ..utils import require_finite, require_geometry, validate_choice

if TYPE_CHECKING:
    from ..core.integrator import RunResult

logger = structlog.get_logger(__name__)

# 26-connected grouping of marked nodes
WALL_STRUCTURE = np.ones((3, 3, 3), dtype=bool)


class IncompatibleRunsError(ValueError):
    """Raised when two runs cannot be compared"""
    pass


@dataclass(frozen=True)
class BubbleWall:
    """One connected set of sign-change nodes"""

    node_count: int
    bbox: Tuple[Tuple[int, int], ...]
    effective_radius: float


@dataclass(frozen=True)
class BubbleCensus:
    walls: Tuple[BubbleWall, ...] = ()

    @property
    def count(self) -> int:
        return len(self.walls)

    @property
    def max_effective_radius(self) -> float:
        return max((w.effective_radius for w in self.walls), default=0.0)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One diagnostics sample of a run"""

    t: float
    integral_phi: float
    max_abs_phi: float
    P: float
    bubbles: BubbleCensus
    cfl: bool
    integral_phi_cubed: float

    @property
    def bubble_count(self) -> int:
        return self.bubbles.count


@dataclass(frozen=True)
class LineSeries:
    """Samples of phi along a line through the cube"""

    which: str
    t: float
    n: int
    arc_param: np.ndarray
    phi: np.ndarray

    @property
    def index(self) -> np.ndarray:
        return np.arange(len(self.phi))


@dataclass(frozen=True)
class GridDifference:
    """Pointwise difference of two lines at the coarse line's parameters"""

    which: str
    coarse_n: int
    fine_n: int
    arc_param: np.ndarray
    difference: np.ndarray
    max_norm: float
    reference_slope: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def _radial_weights(grid: GridSpec) -> np.ndarray:
    r = grid.coordinates()
    return 4.0 * math.pi * r * r * grid.dx


def _volume_sum(values: np.ndarray, grid: GridSpec) -> float:
    if grid.is_radial:
        return float(np.sum(values * _radial_weights(grid)))
    return float(np.sum(values) * grid.dx ** 3)


def integral_phi(state: FieldState, grid: GridSpec) -> float:
    """
    Midpoint-rule integral of phi over the domain

    The cube sums dx^3 v1; the radial lattice sums 4 pi r^2 v1 dr.

    Raises:
        NonFiniteError: If v1 has NaN or Inf entries
    """
    require_finite(state.v1, "v1")
    return _volume_sum(state.v1.astype(np.float64), grid)


def integral_phi_cubed(state: FieldState, grid: GridSpec) -> float:
    """Midpoint-rule integral of phi^3; a negative value breaks the second bubble condition"""
    require_finite(state.v1, "v1")
    v1 = state.v1.astype(np.float64)
    return _volume_sum(v1 * v1 * v1, grid)


def smoothness_P(state: FieldState, grid: GridSpec) -> float:
    """
    P(t) = exp(-2t) / L^2 * max|Laplacian(phi)|

    Raises:
        NonFiniteError: If v1 has NaN or Inf entries
    """
    require_finite(state.v1, "v1")
    lap = spatial_operator(state.v1, grid)
    return math.exp(-2.0 * state.t) / (grid.scaling * grid.scaling) * float(np.max(np.abs(lap)))


def _mark_sign_changes(positive: np.ndarray, negative: np.ndarray) -> np.ndarray:
    marked = np.zeros(positive.shape, dtype=bool)
    for axis in range(positive.ndim):
        lower = [slice(None)] * positive.ndim
        upper = [slice(None)] * positive.ndim
        lower[axis] = slice(None, -1)
        upper[axis] = slice(1, None)
        lower_t, upper_t = tuple(lower), tuple(upper)
        opposite = (positive[lower_t] & negative[upper_t]) | (negative[lower_t] & positive[upper_t])
        marked[lower_t] |= opposite
        marked[upper_t] |= opposite
    return marked


def _region_peaks(
    magnitude: np.ndarray, region: np.ndarray, structure: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """Labels of connected sign regions and each label's peak magnitude (index 0 is 0)"""
    labels, count = ndimage.label(region, structure=structure)
    peaks = np.zeros(count + 1)
    if count:
        peaks[1:] = ndimage.maximum(magnitude, labels, index=np.arange(1, count + 1))
    return labels, peaks


def _radial_census(v1: np.ndarray, grid: GridSpec, eps: float, floor: float) -> BubbleCensus:
    pos_labels, pos_peaks = _region_peaks(v1, v1 > eps, None)
    neg_labels, neg_peaks = _region_peaks(-v1, v1 < -eps, None)

    walls = []
    for i in range(len(v1) - 1):
        a, b = v1[i], v1[i + 1]
        if abs(a) <= eps or abs(b) <= eps or (a > 0) == (b > 0):
            continue
        up, down = (i, i + 1) if a > 0 else (i + 1, i)
        if pos_peaks[pos_labels[up]] < floor or neg_peaks[neg_labels[down]] < floor:
            continue
        crossing = (i + a / (a - b)) * grid.dx
        walls.append(BubbleWall(2, ((i, i + 1),), float(crossing)))
    return BubbleCensus(tuple(walls))


def _cube_census(v1: np.ndarray, grid: GridSpec, eps: float, floor: float) -> BubbleCensus:
    positive = v1 > eps
    negative = v1 < -eps
    marked = _mark_sign_changes(positive, negative)

    labels, count = ndimage.label(marked, structure=WALL_STRUCTURE)
    if count == 0:
        return BubbleCensus()

    pos_labels, pos_peaks = _region_peaks(v1, positive, WALL_STRUCTURE)
    neg_labels, neg_peaks = _region_peaks(-v1, negative, WALL_STRUCTURE)

    cell_volume = grid.dx ** 3
    walls = []
    for index, box in enumerate(ndimage.find_objects(labels), start=1):
        if box is None:
            continue
        wall = labels[box] == index
        # Both sides of the wall must reach the floor somewhere in their region.
        if pos_peaks[pos_labels[box][wall]].max() < floor:
            continue
        if neg_peaks[neg_labels[box][wall]].max() < floor:
            continue
        node_count = int(np.count_nonzero(wall))
        negative_volume = np.count_nonzero(negative[box]) * cell_volume
        radius = (3.0 * negative_volume / (4.0 * math.pi)) ** (1.0 / 3.0)
        bbox = tuple((s.start, s.stop - 1) for s in box)
        walls.append(BubbleWall(node_count, bbox, float(radius)))
    return BubbleCensus(tuple(walls))


def detect_bubbles(
    state: FieldState,
    grid: GridSpec,
    eps_zero: Optional[float] = None,
    zero_fraction: float = DEFAULT_ZERO_FRACTION,
    resolved_fraction: float = DEFAULT_RESOLVED_FRACTION,
) -> BubbleCensus:
    """
    Count bubble walls

    A node is on a wall when one of its 6 neighbors has the strictly opposite
    sign, both magnitudes exceeding eps_zero. Wall nodes are grouped into
    26-connected components, one per bubble. On the radial lattice each
    sign change between neighbors is one spherical bubble.

    A wall is kept only when the positive region and the negative region it
    separates each peak at resolved_fraction * max|phi| or more, so round-off
    ripples next to a plateau are not counted.

    Args:
        state: Snapshot
        grid: Lattice
        eps_zero: Dead zone (default zero_fraction * max|phi|)
        zero_fraction: Dead zone relative to max|phi| when eps_zero is None
        resolved_fraction: Minimum peak of each adjoining sign region, relative to max|phi|

    Returns:
        BubbleCensus
    """
    v1 = state.v1.astype(np.float64)
    peak = float(np.max(np.abs(v1)))
    if eps_zero is None:
        eps_zero = zero_fraction * peak
    floor = resolved_fraction * peak
    if grid.is_radial:
        return _radial_census(v1, grid, eps_zero, floor)
    return _cube_census(v1, grid, eps_zero, floor)


def collect_diagnostics(
    state: FieldState,
    grid: GridSpec,
    *,
    cfl_passed: bool,
    zero_fraction: float = DEFAULT_ZERO_FRACTION,
    resolved_fraction: float = DEFAULT_RESOLVED_FRACTION,
) -> DiagnosticsRecord:
    """Assemble one DiagnosticsRecord for a finite snapshot"""
    bubbles = detect_bubbles(
        state, grid, zero_fraction=zero_fraction, resolved_fraction=resolved_fraction
    )
    return DiagnosticsRecord(
        t=state.t,
        integral_phi=integral_phi(state, grid),
        max_abs_phi=float(np.max(np.abs(state.v1))),
        P=smoothness_P(state, grid),
        bubbles=bubbles,
        cfl=cfl_passed,
        integral_phi_cubed=integral_phi_cubed(state, grid),
    )


def diagonal_sample_count(n: int) -> int:
    return int(round(n * math.sqrt(3.0))) + 1


def extract_line(state: FieldState, grid: GridSpec, which: str) -> LineSeries:
    """
    Sample phi along the x mid-line or the main diagonal

    midline_x returns phi(j dx, 0.5, 0.5) for j = 0..n, exactly v1[j, n/2, n/2]
    for even n and bilinear in y, z for odd n. main_diagonal returns
    round(n sqrt(3)) + 1 trilinear samples at equal arc length from (0,0,0)
    to (1,1,1). arc_param runs from 0 to 1.

    Raises:
        GeometryMismatchError: If the grid is radial
        ValidationError: If which is not a known line
    """
    require_geometry(grid.geometry, Geometry.CUBE3D, "extract_line")
    which = validate_choice(which, "line", LINE_CHOICES)
    v1 = state.v1.astype(np.float64)
    half = grid.n // 2

    if which == "midline_x":
        if grid.n % 2 == 0:
            phi = v1[:, half, half].copy()
        else:
            # y = z = 0.5 falls between nodes; average the four surrounding lines.
            phi = v1[:, half:half + 2, half:half + 2].mean(axis=(1, 2))
        return LineSeries(which, state.t, grid.n, grid.coordinates(), phi)

    arc = np.linspace(0.0, 1.0, diagonal_sample_count(grid.n))
    index = arc * grid.n
    phi = ndimage.map_coordinates(v1, np.vstack([index, index, index]), order=1, mode="nearest")
    return LineSeries(which, state.t, grid.n, arc, phi)


def compare_lines(coarse: LineSeries, fine: LineSeries) -> GridDifference:
    """
    Difference coarse - fine at the coarse parameters

    The fine line is linearly interpolated onto the coarse arc parameters.

    Raises:
        IncompatibleRunsError: If the lines differ in kind or time
    """
    if coarse.which != fine.which:
        raise IncompatibleRunsError(f"Cannot compare {coarse.which} with {fine.which}")
    if not math.isclose(coarse.t, fine.t, rel_tol=1e-12, abs_tol=1e-12):
        raise IncompatibleRunsError(f"Lines sampled at different times: {coarse.t} vs {fine.t}")

    reference = np.interp(coarse.arc_param, fine.arc_param, fine.phi)
    difference = coarse.phi - reference
    slope = np.gradient(reference, coarse.arc_param)
    return GridDifference(
        which=coarse.which,
        coarse_n=coarse.n,
        fine_n=fine.n,
        arc_param=coarse.arc_param,
        difference=difference,
        max_norm=float(np.max(np.abs(difference))),
        reference_slope=slope,
    )


def _check_compatible(coarse: "RunResult", fine: "RunResult") -> None:
    problems = []
    if (coarse.params.mu2, coarse.params.lam) != (fine.params.mu2, fine.params.lam):
        problems.append("mu2/lambda")
    if coarse.grid.scaling != fine.grid.scaling:
        problems.append("L")
    if coarse.initial != fine.initial:
        problems.append("initial data")
    if not math.isclose(coarse.stop_time, fine.stop_time, rel_tol=1e-12, abs_tol=1e-12):
        problems.append(f"final time ({coarse.stop_time} vs {fine.stop_time})")
    if coarse.grid.is_radial or fine.grid.is_radial:
        problems.append("geometry")
    if problems:
        raise IncompatibleRunsError(f"Runs differ in: {', '.join(problems)}")


def compare_grids(coarse: "RunResult", fine: "RunResult", which: str) -> GridDifference:
    """
    Line difference between two runs of the same problem at their final time

    The runs may differ in resolution (grid-convergence study) or precision
    (precision study) but nothing else.

    Raises:
        IncompatibleRunsError: If physics, initial data or final time differ
    """
    _check_compatible(coarse, fine)
    result = compare_lines(
        extract_line(coarse.final_state, coarse.grid, which),
        extract_line(fine.final_state, fine.grid, which),
    )
    logger.info(
        "grids_compared",
        which=which,
        coarse_n=coarse.grid.n,
        fine_n=fine.grid.n,
        max_norm=result.max_norm,
    )
    return result


def difference_in_high_slope_region(
    diff: GridDifference,
    quantile: float = 0.9,
    neighborhood: int = 1,
) -> bool:
    """
    Whether the largest difference sits where the profile is steepest

    True when argmax|diff| is within ``neighborhood`` samples of a node whose
    |slope| is in the top (1 - quantile) fraction.
    """
    slope = np.abs(diff.reference_slope)
    steep = np.flatnonzero(slope >= np.quantile(slope, quantile))
    peak = int(np.argmax(np.abs(diff.difference)))
    return bool(np.any(np.abs(steep - peak) <= neighborhood))


def radial_midline_discrepancy(
    state3d: FieldState,
    grid3d: GridSpec,
    state1d: FieldState,
    grid1d: GridSpec,
) -> float:
    """
    Max-norm difference of the 3D half mid-line (x >= 0.5) and a radial profile

    Raises:
        GeometryMismatchError: If the geometries are swapped
        IncompatibleRunsError: If the spacings or times differ
    """
    require_geometry(grid3d.geometry, Geometry.CUBE3D, "radial_midline_discrepancy")
    require_geometry(grid1d.geometry, Geometry.RADIAL1D, "radial_midline_discrepancy")
    if grid3d.n != grid1d.n or grid3d.n % 2:
        raise IncompatibleRunsError(
            f"Need equal, even resolutions, got {grid3d.n} and {grid1d.n}"
        )
    if not math.isclose(state3d.t, state1d.t, rel_tol=1e-12, abs_tol=1e-12):
        raise IncompatibleRunsError(f"States at different times: {state3d.t} vs {state1d.t}")

    half = grid3d.n // 2
    midline = state3d.v1[half:, half, half].astype(np.float64)
    radial = state1d.v1[: half + 1].astype(np.float64)
    return float(np.max(np.abs(midline - radial)))

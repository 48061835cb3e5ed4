"""
Tests for integrals, the smoothness monitor, bubble census and line tools
"""

import math

import numpy as np
import pytest
from scipy import integrate

from higgs_solver.analysis.diagnostics import (
    GridDifference,
    IncompatibleRunsError,
    LineSeries,
    collect_diagnostics,
    compare_grids,
    compare_lines,
    detect_bubbles,
    diagonal_sample_count,
    difference_in_high_slope_region,
    extract_line,
    integral_phi,
    integral_phi_cubed,
    radial_midline_discrepancy,
    smoothness_P,
)
from higgs_solver.core.field import (
    BumpSpec,
    FieldState,
    GridSpec,
    InitialData,
    Term,
    build_initial,
)
from higgs_solver.core.integrator import SimParams, run_simulation
from higgs_solver.utils import GeometryMismatchError, ValidationError


@pytest.fixture
def grid():
    """32 intervals per axis"""
    return GridSpec(32)


def _state(v1: np.ndarray, t: float = 0.0) -> FieldState:
    return FieldState.from_components(v1, np.zeros_like(v1), t)


def _radius_from(grid: GridSpec, center=(0.5, 0.5, 0.5)) -> np.ndarray:
    x = grid.coordinates()
    cx, cy, cz = center
    return np.sqrt(
        ((x - cx) ** 2)[:, None, None]
        + ((x - cy) ** 2)[None, :, None]
        + ((x - cz) ** 2)[None, None, :]
    )


def test_integrals_on_the_cube(grid):
    """A constant field integrates to ((n + 1) dx)^3"""
    ones = np.ones(grid.shape)
    expected = ((grid.n + 1) * grid.dx) ** 3
    assert integral_phi(_state(ones), grid) == pytest.approx(expected)
    assert integral_phi_cubed(_state(-2.0 * ones), grid) == pytest.approx(-8.0 * expected)


def test_integral_on_the_radial_line():
    """The radial weights 4 pi r^2 dr approximate the unit-ball volume"""
    grid = GridSpec(256, geometry="radial1d")
    value = integral_phi(_state(np.ones(grid.shape)), grid)
    assert value == pytest.approx(4.0 * math.pi / 3.0, rel=0.01)


def test_smoothness_monitor_decays_with_time(grid):
    """P carries the factor exp(-2t) / L^2"""
    state = build_initial(InitialData((Term(3.0, (BumpSpec((0.5, 0.5, 0.5), 0.3),)),)), grid)
    p0 = smoothness_P(state, grid)
    p1 = smoothness_P(FieldState(state.data, 1.0), grid)

    assert p0 > 0.0
    assert p1 == pytest.approx(p0 * math.exp(-2.0))
    assert smoothness_P(_state(np.zeros(grid.shape)), grid) == 0.0


def test_single_bubble(grid):
    """A negative core inside a positive shell is one wall"""
    r = _radius_from(grid)
    v1 = np.where(r < 0.35, 1.0, 0.0)
    v1[r < 0.15] = -1.0
    census = detect_bubbles(_state(v1), grid)

    assert census.count == 1
    wall = census.walls[0]
    assert wall.effective_radius == pytest.approx(0.15, abs=2 * grid.dx)
    (lo, hi), _, _ = wall.bbox
    assert lo < 16 < hi


def test_census_ignores_a_global_sign_flip(grid):
    """Negating the field keeps the wall count"""
    r = _radius_from(grid)
    v1 = np.where(r < 0.35, 1.0, 0.0)
    v1[r < 0.15] = -1.0
    assert detect_bubbles(_state(-v1), grid).count == detect_bubbles(_state(v1), grid).count == 1


def test_two_bubbles(grid):
    """Separated negative cores are separate walls"""
    v1 = np.ones(grid.shape)
    v1[_radius_from(grid, (0.3, 0.5, 0.5)) < 0.1] = -1.0
    v1[_radius_from(grid, (0.7, 0.5, 0.5)) < 0.1] = -1.0
    census = detect_bubbles(_state(v1), grid)

    assert census.count == 2
    assert census.max_effective_radius == pytest.approx(0.1, abs=2 * grid.dx)


def test_bubbles_ignore_the_dead_zone(grid):
    """Tiny values of the other sign are not a wall"""
    v1 = np.ones(grid.shape)
    v1[16, 16, 16] = -1e-12
    assert detect_bubbles(_state(v1), grid).count == 0
    assert detect_bubbles(_state(v1), grid, eps_zero=0.0, resolved_fraction=0.0).count == 1


def test_round_off_ripples_next_to_a_plateau_are_not_walls(grid):
    """A -8e-4 speck beside a 2.12 plateau is below the resolved floor"""
    v1 = np.where(_radius_from(grid) < 0.3, 2.12, 0.0)
    v1[6:8, 16, 16] = -8e-4
    assert detect_bubbles(_state(v1), grid).count == 0
    assert detect_bubbles(_state(v1), grid, resolved_fraction=0.0).count == 1

    v1[14:19, 14:19, 14:19] = -1.5
    census = detect_bubbles(_state(v1), grid)
    assert census.count == 1
    assert census.walls[0].bbox[0][0] >= 13


def test_radial_round_off_ripples_are_not_walls():
    """On the radial lattice a crossing into dust is dropped"""
    grid = GridSpec(32, geometry="radial1d")
    v1 = np.zeros(grid.shape)
    v1[:22] = 2.12
    v1[22] = -8e-4
    assert detect_bubbles(_state(v1), grid).count == 0
    assert detect_bubbles(_state(v1), grid, resolved_fraction=0.0).count == 1


def test_positive_field_has_no_bubbles(grid):
    """Positive data has no sign changes"""
    state = build_initial(InitialData((Term(3.0, (BumpSpec((0.5, 0.5, 0.5), 0.3),)),)), grid)
    assert detect_bubbles(state, grid).count == 0


def test_radial_bubble_radius():
    """The radial census interpolates the zero crossing"""
    grid = GridSpec(16, geometry="radial1d")
    r = grid.coordinates()
    v1 = np.where(r < 0.9, r - 0.26, 0.0)
    census = detect_bubbles(_state(v1), grid)

    assert census.count == 1
    assert census.walls[0].effective_radius == pytest.approx(0.26)


def test_collect_diagnostics(grid):
    """A record bundles every diagnostic"""
    state = build_initial(InitialData((Term(3.0, (BumpSpec((0.5, 0.5, 0.5), 0.3),)),)), grid)
    record = collect_diagnostics(state, grid, cfl_passed=True)

    assert record.t == 0.0
    assert record.max_abs_phi == pytest.approx(3.0)
    assert record.integral_phi > 0.0
    assert record.integral_phi_cubed > 0.0
    assert record.bubble_count == 0
    assert record.cfl


def test_midline_extraction(grid):
    """midline_x is v1[:, n/2, n/2]"""
    x = grid.coordinates()
    v1 = np.broadcast_to(x[:, None, None] * (1.0 - x[:, None, None]), grid.shape).copy()
    line = extract_line(_state(v1, 0.5), grid, "midline_x")

    assert line.t == 0.5
    assert len(line.phi) == grid.n + 1
    np.testing.assert_array_equal(line.phi, v1[:, 16, 16])
    np.testing.assert_array_equal(line.index, np.arange(grid.n + 1))


def test_midline_for_odd_resolution_is_centered():
    """With n odd the mid-line is interpolated to y = z = 0.5"""
    grid = GridSpec(33)
    x = grid.coordinates()
    v1 = x[:, None, None] + 2.0 * x[None, :, None] + 4.0 * x[None, None, :]
    line = extract_line(_state(v1), grid, "midline_x")

    assert len(line.phi) == 34
    np.testing.assert_allclose(line.phi, x + 3.0, rtol=0, atol=1e-12)


def test_diagonal_extraction(grid):
    """The diagonal has round(n sqrt 3) + 1 samples, exact for linear fields"""
    x = grid.coordinates()
    v1 = x[:, None, None] + x[None, :, None] + x[None, None, :]
    line = extract_line(_state(v1), grid, "main_diagonal")

    assert diagonal_sample_count(32) == 56
    assert len(line.phi) == 56
    assert line.arc_param[0] == 0.0 and line.arc_param[-1] == 1.0
    np.testing.assert_allclose(line.phi, 3.0 * line.arc_param, atol=1e-12)


def test_line_extraction_errors(grid):
    """Radial grids have no lines; unknown lines are rejected"""
    radial = GridSpec(32, geometry="radial1d")
    with pytest.raises(GeometryMismatchError):
        extract_line(_state(np.zeros(radial.shape)), radial, "midline_x")
    with pytest.raises(ValidationError):
        extract_line(_state(np.zeros(grid.shape)), grid, "anti_diagonal")


def test_compare_lines_interpolates_the_fine_line():
    """Linear profiles compare exactly; times and kinds must agree"""
    coarse_s = np.linspace(0.0, 1.0, 9)
    fine_s = np.linspace(0.0, 1.0, 17)
    coarse = LineSeries("midline_x", 1.0, 8, coarse_s, 2.0 * coarse_s + 0.1)
    fine = LineSeries("midline_x", 1.0, 16, fine_s, 2.0 * fine_s)

    diff = compare_lines(coarse, fine)
    np.testing.assert_allclose(diff.difference, 0.1)
    assert diff.max_norm == pytest.approx(0.1)
    assert (diff.coarse_n, diff.fine_n) == (8, 16)

    with pytest.raises(IncompatibleRunsError):
        compare_lines(coarse, LineSeries("midline_x", 2.0, 16, fine_s, fine_s))
    with pytest.raises(IncompatibleRunsError):
        compare_lines(coarse, LineSeries("main_diagonal", 1.0, 16, fine_s, fine_s))


def test_high_slope_region():
    """The peak difference is judged against the steepest tenth of the profile"""
    s = np.linspace(0.0, 1.0, 21)
    slope = np.exp(-((np.arange(21) - 10.0) ** 2))
    near = np.zeros(21)
    near[11] = 1.0
    far = np.zeros(21)
    far[0] = 1.0

    assert difference_in_high_slope_region(
        GridDifference("midline_x", 20, 40, s, near, 1.0, slope)
    )
    assert not difference_in_high_slope_region(
        GridDifference("midline_x", 20, 40, s, far, 1.0, slope)
    )


def test_compare_grids_between_runs():
    """Coarse and fine runs of the same problem differ little; other physics is refused"""
    data = InitialData((Term(3.0, (BumpSpec((0.5, 0.5, 0.5), 0.3),)),))
    coarse_grid, fine_grid = GridSpec(12), GridSpec(24)
    coarse = run_simulation(data, SimParams.for_grid(coarse_grid, 9.0, 2.0, 0.05), coarse_grid)
    fine = run_simulation(data, SimParams.for_grid(fine_grid, 9.0, 2.0, 0.05), fine_grid)

    diff = compare_grids(coarse, fine, "midline_x")
    assert len(diff.difference) == 13
    assert diff.max_norm < 0.1

    other = run_simulation(data, SimParams.for_grid(fine_grid, 4.0, 2.0, 0.05), fine_grid)
    with pytest.raises(IncompatibleRunsError):
        compare_grids(coarse, other, "midline_x")


def test_radial_midline_discrepancy_at_start():
    """The same centered bump sampled both ways agrees to round-off"""
    bump = BumpSpec((0.5, 0.5, 0.5), 0.3)
    data = InitialData((Term(3.0, (bump,)),))
    grid3d, grid1d = GridSpec(32), GridSpec(32, geometry="radial1d")
    cube = build_initial(data, grid3d)
    line = build_initial(data.to_radial(), grid1d)

    assert radial_midline_discrepancy(cube, grid3d, line, grid1d) < 1e-12
    with pytest.raises(GeometryMismatchError):
        radial_midline_discrepancy(line, grid1d, cube, grid3d)
    with pytest.raises(IncompatibleRunsError):
        radial_midline_discrepancy(cube, grid3d, FieldState(line.data, 1.0), grid1d)


def test_bump_integral_matches_quadrature():
    """The lattice sum of a unit bump matches a fine radial quadrature"""
    grid = GridSpec(128)
    state = build_initial(InitialData((Term(1.0, (BumpSpec((0.5, 0.5, 0.5), 0.3),)),)), grid)

    def integrand(r):
        if r * r >= 0.09:
            return 0.0
        return 4.0 * math.pi * r * r * math.exp(1.0 / 0.09 - 1.0 / (0.09 - r * r))

    exact, _ = integrate.quad(integrand, 0.0, 0.3, limit=200)
    assert integral_phi(state, grid) == pytest.approx(exact, rel=1e-4)
    negated = FieldState(-state.data, 0.0)
    assert integral_phi(negated, grid) == -integral_phi(state, grid)

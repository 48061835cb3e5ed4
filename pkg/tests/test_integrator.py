"""
Tests for the right-hand side, RK4 stepping and the run driver
"""

import math

import numpy as np
import pytest

from higgs_solver.core.field import (
    BumpSpec,
    FieldState,
    GridSpec,
    InitialData,
    Precision,
    Term,
    build_initial,
    zero_state,
)
from higgs_solver.core.integrator import (
    SimParams,
    StopReason,
    cfl_check,
    default_dt,
    evaluate_rhs,
    rhs,
    rk4_step,
    run_simulation,
)
from higgs_solver.core.runge_kutta import StepWorkspace, rk4_advance, rk4_advance_textbook
from higgs_solver.experiment import load_config
from higgs_solver.utils import ValidationError

RADIAL = GridSpec(16, geometry="radial1d")


def _centered(weight0: float, weight1: float, radius: float, geometry: str) -> InitialData:
    center = (0.0,) if geometry == "radial1d" else (0.5, 0.5, 0.5)
    bump = BumpSpec(center, radius)
    phi1 = (Term(weight1, (bump,)),) if weight1 else ()
    return InitialData((Term(weight0, (bump,)),), phi1)


@pytest.fixture
def cube_state():
    """3 B(c, 0.3) with phi_t = -5 B on a 12^3 lattice"""
    grid = GridSpec(12)
    return grid, build_initial(_centered(3.0, -5.0, 0.3, "cube3d"), grid)


def test_sim_params_validation():
    """Invalid parameters are named in the error"""
    params = SimParams.for_grid(RADIAL, mu2=9.0, lam=2.0, t_end=1.0)
    assert params.dt == pytest.approx(RADIAL.dx / 20.0)
    assert params.n_steps == 320
    assert default_dt(GridSpec(128)) == pytest.approx(1.0 / 2560.0)

    with pytest.raises(ValidationError, match="^dt "):
        SimParams(9.0, 2.0, dt=0.0, t_end=1.0)
    with pytest.raises(ValidationError, match="^lambda "):
        SimParams(9.0, float("nan"), dt=0.1, t_end=1.0)
    with pytest.raises(ValidationError):
        SimParams(9.0, 2.0, dt=0.1, t_end=1.0, cfl_policy="ignore")

    # Tachyonic parameters are legal.
    assert SimParams(1.0, -1.0, dt=0.1, t_end=1.0).lam == -1.0


def test_rhs_of_zero_state_is_zero(cube_state):
    """The origin is a fixed point of the semi-discrete system"""
    grid, _ = cube_state
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)
    out = rhs(0.0, zero_state(grid), params, grid)
    assert out.shape == (2,) + grid.shape
    assert not out.any()


def test_rhs_boundary_entries_are_zero(cube_state):
    """Both components vanish on the boundary"""
    grid, state = cube_state
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)
    out = rhs(0.0, state, params, grid)
    np.testing.assert_array_equal(out[:, 0], 0.0)
    np.testing.assert_array_equal(out[:, :, -1], 0.0)
    np.testing.assert_array_equal(out[0], state.v2)


def test_rhs_huge_scaling_reduces_to_duffing():
    """With L = 1e9 the Laplacian term disappears"""
    grid = GridSpec(12, scaling=1e9)
    state = build_initial(_centered(3.0, -5.0, 0.3, "cube3d"), grid)
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)
    out = rhs(0.0, state, params, grid)

    v1, v2 = state.v1, state.v2
    expected = 9.0 * v1 - 2.0 * v1**3 - 3.0 * v2
    np.testing.assert_allclose(out[1][1:-1, 1:-1, 1:-1], expected[1:-1, 1:-1, 1:-1], atol=1e-9)


def test_rhs_rejects_mismatched_state(cube_state):
    """A state from another grid is refused"""
    grid, _ = cube_state
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)
    with pytest.raises(ValidationError):
        rhs(0.0, zero_state(GridSpec(16)), params, grid)


def test_rk4_forms_are_bit_identical(cube_state):
    """Register-reuse and textbook RK4 give the same bits"""
    grid, state = cube_state
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)

    def f(t, values):
        return evaluate_rhs(t, values, params, grid)

    reuse = rk4_step(0.0, state, params, grid)
    textbook = rk4_advance_textbook(f, 0.0, state.data, params.dt)
    np.testing.assert_array_equal(reuse.data, textbook)
    assert reuse.t == pytest.approx(params.dt)


def test_rk4_forms_are_bit_identical_in_single_precision():
    """The equivalence holds for float32 storage too"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 1.0, precision="single")
    state = build_initial(_centered(1.0, -5.0, 0.3, "radial1d"), RADIAL, np.float32)

    def f(t, values):
        return evaluate_rhs(t, values, params, RADIAL)

    reuse = rk4_step(0.0, state, params, RADIAL)
    assert reuse.dtype == np.float32
    np.testing.assert_array_equal(reuse.data, rk4_advance_textbook(f, 0.0, state.data, params.dt))


def test_rk4_accuracy_on_exponential_decay():
    """One step of y' = -y matches exp(-dt) to fifth order"""
    y = np.ones((2, 3))
    out = rk4_advance(lambda t, v: -v, 0.0, y, 0.01, StepWorkspace.like(y))
    np.testing.assert_allclose(out, math.exp(-0.01), rtol=0, atol=1e-11)


def test_rk4_workspace_mismatch():
    """Workspaces must match the state extents"""
    y = np.ones((2, 3))
    with pytest.raises(ValidationError):
        rk4_advance(lambda t, v: -v, 0.0, y, 0.01, StepWorkspace.like(np.ones((2, 4))))


def test_cfl_check_matches_bound():
    """dx = 2e-3, dt = 1e-4: bound near 11.547"""
    grid = GridSpec(500, geometry="radial1d")
    params = SimParams(9.0, 2.0, dt=1e-4, t_end=1.0)
    values = np.zeros((2,) + grid.shape)
    values[0, 10] = 2.0

    status = cfl_check(FieldState(values), grid, params)
    assert status.passed
    assert status.bound == pytest.approx(11.547, abs=1e-3)

    values[0, 10] = 130.0
    status = cfl_check(FieldState(values), grid, params)
    assert not status.passed
    assert status.observed == 130.0


def test_zero_data_run_completes():
    """Zero data stays zero and is sampled every step"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, t_end=0.01)
    result = run_simulation(InitialData(), params, RADIAL)

    assert result.stop_reason is StopReason.COMPLETED
    assert result.steps == 3
    assert len(result.records) == 4
    assert result.stop_time == pytest.approx(3 * params.dt)
    assert not result.final_state.data.any()
    assert all(r.bubble_count == 0 for r in result.records)


def test_snapshot_times_force_samples():
    """Samples are taken at the start, the snapshot steps and the end"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, t_end=0.05, sample_every=1000)
    seen = []
    result = run_simulation(
        _centered(3.0, 0.0, 0.3, "radial1d"),
        params,
        RADIAL,
        hooks=[lambda record, state: seen.append(state.t)],
        snapshot_times=[0.025],
    )

    times = [r.t for r in result.records]
    assert times == pytest.approx([0.0, 0.025, 0.05])
    assert seen == pytest.approx(times)


def test_resumed_run_is_bit_identical():
    """Stopping and resuming from the saved state changes nothing"""
    data = _centered(1.0, -5.0, 0.3, "radial1d")
    full = run_simulation(data, SimParams.for_grid(RADIAL, 9.0, 2.0, 0.05, sample_every=4), RADIAL)
    half = run_simulation(data, SimParams.for_grid(RADIAL, 9.0, 2.0, 0.025, sample_every=4), RADIAL)
    resumed = run_simulation(
        None,
        SimParams.for_grid(RADIAL, 9.0, 2.0, 0.05, sample_every=4),
        RADIAL,
        start_state=half.final_state,
    )

    assert resumed.stop_reason is StopReason.COMPLETED
    np.testing.assert_array_equal(resumed.final_state.data, full.final_state.data)
    assert resumed.stop_time == pytest.approx(full.stop_time)


def test_start_state_must_match_precision():
    """A double state cannot seed a single-precision run"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 0.05, precision=Precision.SINGLE)
    with pytest.raises(ValidationError):
        run_simulation(None, params, RADIAL, start_state=zero_state(RADIAL))
    with pytest.raises(ValidationError):
        run_simulation(None, params, RADIAL)


def test_halo_stop():
    """A field already inside the halo stops the run at once"""
    values = np.zeros((2,) + RADIAL.shape)
    values[0, 5] = 1.0
    values[0, RADIAL.n - 1] = 0.5
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 1.0)

    result = run_simulation(None, params, RADIAL, start_state=FieldState(values))
    assert result.stop_reason is StopReason.HALO_REACHED
    assert result.steps == 0
    assert "halo" in result.stop_message
    assert len(result.records) == 1


def test_tachyonic_run_blows_up():
    """mu2 = 1, lambda = -1 disperses first, then grows and blows up before t_end"""
    grid = GridSpec(32, geometry="radial1d")
    data = _centered(2.0, 10.0, 0.2, "radial1d")
    params = SimParams.for_grid(grid, 1.0, -1.0, 16.0, sample_every=50, cfl_policy="warn")
    result = run_simulation(data, params, grid)

    assert result.stop_reason is StopReason.BLOW_UP
    assert 3.5 < result.stop_time < 16.0
    assert result.final_state.blown_up
    assert np.isfinite(result.final_state.data).all()
    assert result.records[-1].max_abs_phi > result.records[0].max_abs_phi


def test_tachyonic_run_stops_on_cfl():
    """With the stop policy the CFL bound ends the run before blow-up"""
    grid = GridSpec(32, geometry="radial1d")
    data = _centered(2.0, 10.0, 0.2, "radial1d")
    params = SimParams.for_grid(grid, 1.0, -1.0, 16.0, sample_every=50)
    result = run_simulation(data, params, grid)

    assert result.stop_reason is StopReason.CFL_VIOLATION
    assert result.records[-1].max_abs_phi >= grid.dx / (math.sqrt(3.0) * params.dt)
    assert not result.records[-1].cfl


def test_stable_run_keeps_sign_and_bounds():
    """Positive data with mu2 = 9, lambda = 2 forms no bubble and stays bounded"""
    data = _centered(3.0, 0.0, 0.3, "radial1d")
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 0.25, sample_every=20)
    result = run_simulation(data, params, RADIAL)

    assert result.stop_reason is StopReason.COMPLETED
    # Fourth-order stencils are not sign-preserving; undershoot stays tiny.
    assert result.final_state.v1.min() > -1e-2 * result.final_state.v1.max()
    assert np.all(result.series("bubble_count") == 0)
    assert result.series("max_abs_phi").max() < 3.5
    assert result.cubic_violation_time is None


def test_rk4_single_step_matches_taylor_polynomial():
    """y' = -y with dt = 0.1 gives the fourth-order Taylor value"""
    y = np.ones(1)
    out = rk4_advance(lambda t, v: -v, 0.0, y, 0.1, StepWorkspace.like(y))
    assert out[0] == pytest.approx(0.9048375, abs=1e-12)
    assert abs(out[0] - math.exp(-0.1)) == pytest.approx(8.2e-8, rel=0.01)


def test_zero_state_step_only_advances_time():
    """A vanishing right-hand side leaves the state unchanged"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 1.0)
    out = rk4_step(0.0, zero_state(RADIAL), params, RADIAL)
    assert not out.data.any()
    assert out.t == pytest.approx(params.dt)


def test_rk4_forms_agree_over_many_steps():
    """Register reuse and textbook stepping stay together over 100 steps"""
    params = SimParams.for_grid(RADIAL, 9.0, 2.0, 1.0)
    state = build_initial(_centered(3.0, -5.0, 0.3, "radial1d"), RADIAL)

    def f(t, values):
        return evaluate_rhs(t, values, params, RADIAL)

    reuse = state
    textbook = state.data.copy()
    for step in range(100):
        reuse = rk4_step(reuse.t, reuse, params, RADIAL)
        textbook = rk4_advance_textbook(f, step * params.dt, textbook, params.dt)
    scale = np.max(np.abs(textbook))
    assert np.max(np.abs(reuse.data - textbook)) <= 1e-13 * scale


def test_rhs_at_a_single_interior_node():
    """One nonzero node sees the -15/2 centre weight and 4/3 at its neighbors"""
    grid = GridSpec(16, scaling=5.0)
    values = np.zeros((2,) + grid.shape)
    a = 0.5
    values[0, 8, 8, 8] = a
    params = SimParams.for_grid(grid, 9.0, 2.0, 1.0)
    out = rhs(0.0, FieldState(values), params, grid)

    coef = 1.0 / (25.0 * grid.dx**2)
    assert out[1][8, 8, 8] == pytest.approx((9.0 - 7.5 * coef) * a - 2.0 * a**3, rel=1e-12)
    assert out[1][9, 8, 8] == pytest.approx(4.0 / 3.0 * coef * a, rel=1e-12)
    assert out[1][8, 8, 10] == pytest.approx(-coef * a / 12.0, rel=1e-12)
    assert out[1][9, 9, 8] == 0.0
    assert out[0][8, 8, 8] == 0.0


def test_rk4_converges_at_fourth_order_in_time():
    """Halving dt cuts the error about 16x when the Laplacian is switched off"""
    grid = GridSpec(16, geometry="radial1d", scaling=1e9)
    start = build_initial(_centered(1.0, 0.5, 0.3, "radial1d"), grid)

    def final_v1(dt):
        params = SimParams(1.0, 1.0, dt=dt, t_end=0.5)
        state = start
        for _ in range(params.n_steps):
            state = rk4_step(state.t, state, params, grid)
        return state.v1.copy()

    coarse, middle, fine = (final_v1(dt) for dt in (1e-2, 5e-3, 2.5e-3))
    first = np.max(np.abs(coarse - middle))
    second = np.max(np.abs(middle - fine))
    assert math.log2(first / second) >= 3.8


def test_positive_plateau_run_reports_no_bubbles():
    """Radial example5 undershoots slightly near r = 1 but never counts a wall"""
    experiment = load_config("preset: example5\ngeometry: radial1d\nsample_every: 10\n", 128)
    result = run_simulation(experiment.initial, experiment.params(), experiment.grid())

    assert result.stop_reason is StopReason.COMPLETED
    assert np.all(result.series("bubble_count") == 0)
    assert result.final_state.v1[0] == pytest.approx(math.sqrt(9.0 / 2.0), rel=0.01)

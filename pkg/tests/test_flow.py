import numpy as np
import pytest

from coneflow.errors import DefinitenessError, NonFiniteError
from coneflow.fields import MetricField
from coneflow.flow import (
    DirichletProblem,
    FlowState,
    StepControl,
    _rhs_components,
    _rhs_components_reference,
    cfl_timestep,
    flow_rhs,
    run_dirichlet,
    run_flow,
    step,
)
from coneflow.grid import RadialGrid
from coneflow.models import GeometrySpec, instantiate


def make_bg(variant="flat_cone", n=64, **kw):
    grid = RadialGrid.log_uniform(0.2, 1.8, n)
    return instantiate(GeometrySpec(variant, **kw), grid)


def test_control_validation():
    with pytest.raises(ValueError):
        StepControl(cfl_fraction=0.0)
    with pytest.raises(ValueError):
        StepControl(cfl_fraction=1.2)
    with pytest.raises(ValueError):
        StepControl(t_final=-1.0)


def test_rhs_on_flat_background_is_machine_zero():
    for variant, beta in (("flat_plane", 1.0), ("flat_cone", 0.5)):
        bg = make_bg(variant, beta=beta)
        rhs = flow_rhs(bg.metric, bg)
        assert np.max(np.abs(rhs)) == 0.0, variant


def test_rhs_on_constant_curvature_background():
    # homothety: dg/dt = -2 K g~ exactly at t = 0 (A = 0, V = 0)
    grid = RadialGrid.uniform(0.4, 2.4, 64)
    bg = instantiate(GeometrySpec("sphere"), grid)
    rhs = flow_rhs(bg.metric, bg)
    assert np.max(np.abs(rhs + 2.0 * bg.metric.components)) < 1e-11
    bgh = instantiate(GeometrySpec("hyperbolic_plane"), grid)
    rhs = flow_rhs(bgh.metric, bgh)
    assert np.max(np.abs(rhs - 2.0 * bgh.metric.components)) < 1e-11


def test_kernel_matches_reference_route():
    bg = make_bg("perturbed_cone", beta=0.8, amplitude=0.5)
    rng = np.random.default_rng(7)
    gc = bg.metric.components * (1.0 + 0.05 * rng.uniform(-1, 1, (64, 1, 1)))
    fast = _rhs_components(gc, bg.grid, bg)
    slow = _rhs_components_reference(gc, bg.grid, bg)
    scale = np.max(np.abs(slow))
    assert np.max(np.abs(fast - slow)) < 1e-10 * max(scale, 1.0)


def test_cfl_timestep_formula():
    bg = make_bg("flat_cone", beta=0.5)
    ctl = StepControl(cfl_fraction=0.8)
    dt = cfl_timestep(bg.metric, bg.grid, ctl)
    # g^rr = 1 everywhere, n = 2
    assert np.isclose(dt, 0.8 * bg.grid.min_spacing**2 / 4.0)
    ctl2 = StepControl(cfl_fraction=0.8, max_dt=dt / 2)
    assert cfl_timestep(bg.metric, bg.grid, ctl2) == dt / 2
    ctl3 = StepControl(fixed_dt=1e-7)
    assert cfl_timestep(bg.metric, bg.grid, ctl3) == 1e-7


def test_guard_nonfinite():
    bg = make_bg()
    gc = bg.metric.components.copy()
    gc[10, 0, 0] = np.nan
    st = FlowState(time=0.0, g=MetricField(bg.grid, gc))
    with pytest.raises(NonFiniteError) as ei:
        # the NaN spreads through the stencil before the guard sees it, so
        # only the presence of a flagged index is stable
        step(st, bg, StepControl(fixed_dt=1e-8))
    assert ei.value.index >= 0


def test_guard_definiteness():
    bg = make_bg()
    gc = bg.metric.components.copy()
    gc[5] = [[1.0, 0.0], [0.0, -1.0]]
    st = FlowState(time=0.0, g=MetricField(bg.grid, gc))
    with pytest.raises(DefinitenessError) as ei:
        step(st, bg, StepControl())
    assert ei.value.index == 5


def test_stationary_flow_many_steps():
    bg = make_bg("flat_cone", beta=0.5, n=32)
    ctl = StepControl(cfl_fraction=0.9)
    state = FlowState(time=0.0, g=bg.metric)
    rows = (bg.metric.components[0], bg.metric.components[-1])
    for _ in range(50):
        state = step(state, bg, ctl, boundary_fn=lambda t: rows)
    assert np.max(np.abs(state.g.components - bg.metric.components)) == 0.0
    assert state.step_count == 50


def test_snapshot_times_exact():
    bg = make_bg(n=32)
    ctl = StepControl(cfl_fraction=0.9, snapshot_interval=2.5e-4)
    snaps = run_flow(bg, ctl, 1e-3)
    times = [s.time for s in snaps]
    assert times == [0.0, 2.5e-4, 5e-4, 7.5e-4, 1e-3]
    for s in snaps:
        assert "lambda_min" in s.diagnostics
        assert "max_deturck_norm" in s.diagnostics


def test_default_boundary_pins_initial_rows_bitwise():
    bg = make_bg("perturbed_cone", beta=0.8, amplitude=0.5, n=32)
    snaps = run_flow(bg, StepControl(cfl_fraction=0.9), 5e-4)
    g0, gT = snaps[0].g.components, snaps[-1].g.components
    assert np.array_equal(g0[0], gT[0])
    assert np.array_equal(g0[-1], gT[-1])
    # interior actually moved
    assert np.max(np.abs(gT - g0)) > 0


def test_run_dirichlet_wrapper():
    bg = make_bg("perturbed_cone", beta=0.8, amplitude=0.5, n=32)
    prob = DirichletProblem(background=bg, t_final=2e-4)
    snaps = run_dirichlet(prob, StepControl(cfl_fraction=0.9))
    assert snaps[-1].time == 2e-4
    assert snaps[-1].g.check_spd() is None


def test_time_dependent_boundary_followed():
    # pin both rows to an exact homothety; the run must track it
    grid = RadialGrid.uniform(0.4, 2.4, 64)
    bg = instantiate(GeometrySpec("hyperbolic_plane"), grid)

    def boundary(t):
        c = 1.0 + 2.0 * t
        return c * bg.metric.components[0], c * bg.metric.components[-1]

    snaps = run_flow(bg, StepControl(cfl_fraction=0.9), 5e-2,
                     boundary_fn=boundary)
    exact = (1.0 + 2.0 * snaps[-1].time) * bg.metric.components
    rel = np.max(np.abs(snaps[-1].g.components - exact) / np.abs(exact).max())
    assert rel < 1e-5

import numpy as np
import pytest

from coneflow.exhaustion import (
    ConvergenceReport,
    ExhaustionSchedule,
    build_exhaustion,
    diagonal_convergence,
    run_exhaustion,
)
from coneflow.flow import StepControl
from coneflow.models import GeometrySpec

CONE = GeometrySpec("flat_cone", beta=0.8)


def small_schedule(depth=3):
    return build_exhaustion(
        rho0=0.2, q=0.5, depth=depth, window=(0.4, 0.8), outer_radius=1.6
    )


def test_build_validation():
    with pytest.raises(ValueError):
        build_exhaustion(0.2, 1.5, 3, (0.4, 0.8), 1.6)  # q outside (0,1)
    with pytest.raises(ValueError):
        build_exhaustion(0.2, 0.5, 0, (0.4, 0.8), 1.6)  # depth < 1
    with pytest.raises(ValueError):
        build_exhaustion(0.2, 0.5, 3, (0.1, 0.8), 1.6)  # window below rho0
    with pytest.raises(ValueError):
        build_exhaustion(1.5, 0.5, 3, (0.4, 0.8), 1.6)  # rho0 near R_max


def test_inner_radii_follow_q():
    sched = small_schedule(depth=4)
    radii = sched.inner_radii
    assert np.allclose(radii, [0.2, 0.1, 0.05, 0.025], rtol=1e-12)
    assert sched.rho0 == radii[0]


def test_domains_nest_bitwise():
    sched = small_schedule(depth=4)
    big = sched.domains[-1].r_values
    for grid in sched.domains[:-1]:
        # every shallower domain is a suffix of the deepest one, bitwise
        assert np.array_equal(grid.r_values, big[-grid.n_points:])


def test_window_points_shared_bitwise():
    sched = small_schedule(depth=3)
    a, b = sched.window
    ref = None
    for grid in sched.domains:
        r = grid.r_values
        w = r[(r >= a) & (r <= b)]
        if ref is None:
            ref = w
        else:
            assert np.array_equal(ref, w)
    assert ref.size >= 4


def test_rho0_snapping():
    # a rho0 between master levels snaps to the nearest one
    sched = build_exhaustion(0.21, 0.5, 2, (0.4, 0.8), 1.6)
    assert abs(sched.rho0 - 0.21) < 0.21 * (2 ** (1 / 16) - 1)


def test_flat_cone_gaps_are_zero():
    sched = small_schedule(depth=3)
    ctl = StepControl(cfl_fraction=1.0, t_final=2e-4)
    results = run_exhaustion(sched, CONE, ctl, 2e-4)
    rep = diagonal_convergence(results, sched, CONE, max_order=1,
                               tolerance=1e-10)
    assert rep.passed
    assert all(g == 0.0 for v in rep.gaps.values() for g in v)


def test_single_member_trivially_passes():
    sched = build_exhaustion(0.2, 0.5, 1, (0.4, 0.8), 1.6)
    rep = diagonal_convergence([[None]], sched, CONE)
    assert rep.passed
    assert rep.gaps == {}


def test_report_payload_shape():
    rep = ConvergenceReport(
        gaps={0: [1e-3, 1e-4]}, final_gaps={0: 1e-4}, tolerance=1e-3,
        monotone=True, passed=True,
    )
    payload = rep.to_payload()
    assert payload["gaps"]["0"] == [1e-3, 1e-4]
    assert payload["passed"] is True


def test_schedule_field_validation():
    with pytest.raises(ValueError):
        ExhaustionSchedule(rho0=0.2, q=0.5, depth=2, window=(0.8, 0.4),
                          outer_radius=1.6, points_per_segment=16)

"""End-to-end acceptance checks for the flow laboratory.

Each test pins one of the headline guarantees: exact stationarity and
homothety tracking, gauge identities, agreement with an independent
oracle, exhaustion convergence, distance-scaling audits, the quantitative
cutoff/barrier toolbox, and byte-level determinism of the report path.
"""

import json
import time

import numpy as np

from coneflow import calculus
from coneflow.audits import audit_snapshot, uniform_equivalence_window
from coneflow.config import config_from_dict
from coneflow.cutoffs import (
    coth_linear_check,
    elementary_estimate_bound,
    make_eta,
    make_xi,
    shi_constant_audit,
    xi_hessian_lower_bound,
)
from coneflow.exhaustion import build_exhaustion, diagonal_convergence, run_exhaustion
from coneflow.fields import MetricField
from coneflow.flow import FlowState, StepControl, run_flow, step
from coneflow.grid import RadialGrid
from coneflow.models import (
    GeometrySpec,
    conformal_scalar_oracle,
    exact_homothety_solution,
    instantiate,
)
from coneflow.report import run_experiment


# --- 1. stationarity of flat backgrounds -------------------------------


def drift_after_steps(variant, beta, n_steps=1000, n=256):
    grid = RadialGrid.log_uniform(0.1, 2.0, n)
    bg = instantiate(GeometrySpec(variant, beta=beta), grid)
    state = FlowState(time=0.0, g=bg.metric)
    ctl = StepControl(cfl_fraction=0.9)
    t0 = time.perf_counter()
    for _ in range(n_steps):
        state = step(state, bg, ctl)
    wall = time.perf_counter() - t0
    drift = float(np.max(np.abs(state.g.components - bg.metric.components)))
    return drift, wall, grid


def test_flat_plane_stationary_1000_steps():
    drift, wall, _ = drift_after_steps("flat_plane", 1.0)
    assert drift <= 1e-10
    assert wall < 10.0


def test_flat_cone_stationary_1000_steps():
    drift, wall, grid = drift_after_steps("flat_cone", 0.5)
    h_max = float(np.max(np.diff(grid.r_values)))
    assert drift <= 5.0 * h_max**2
    assert wall < 10.0


# --- 2. exact homothety tracking ---------------------------------------


def homothety_error(spec, n, t_final):
    grid = RadialGrid.uniform(0.4, 2.4, n)
    bg = instantiate(spec, grid)

    def boundary(t):
        exact = exact_homothety_solution(spec, bg, t).components
        return exact[0], exact[-1]

    snaps = run_flow(bg, StepControl(cfl_fraction=0.9), t_final,
                     boundary_fn=boundary)
    exact = exact_homothety_solution(spec, bg, t_final).components
    return float(
        np.max(np.abs(snaps[-1].g.components - exact)) / np.max(np.abs(exact))
    )


def test_sphere_homothety_and_convergence_rate():
    spec = GeometrySpec("sphere")
    err_fine = homothety_error(spec, 256, 0.2)
    assert err_fine <= 1e-4
    err_coarse = homothety_error(spec, 128, 0.2)
    assert err_coarse / err_fine >= 3.5


def test_hyperbolic_homothety():
    assert homothety_error(GeometrySpec("hyperbolic_plane"), 128, 0.2) <= 1e-4


# --- 3. empirical uniform-equivalence window ---------------------------


def test_equivalence_window_tracks_eigenvalue_spread():
    spec = GeometrySpec("sphere")
    grid = RadialGrid.uniform(0.4, 2.4, 128)
    bg = instantiate(spec, grid)

    def boundary(t):
        exact = exact_homothety_solution(spec, bg, t).components
        return exact[0], exact[-1]

    cadence = 1e-3
    snaps = run_flow(
        bg,
        StepControl(cfl_fraction=0.9, snapshot_interval=cadence),
        0.105,
        boundary_fn=boundary,
    )
    deltas = (0.05, 0.1, 0.2)
    win = uniform_equivalence_window(snaps, bg, deltas)
    # along g(t) = (1 - 2t) g~ the eigenvalue spread is exactly 2t, so the
    # window closes at t = delta / 2
    for d in deltas:
        assert abs(win[d] - d / 2) <= 0.05 * (d / 2) + cadence
    assert [win[d] for d in deltas] == sorted(win[d] for d in deltas)


def test_equivalence_window_monotone_on_other_flows():
    deltas = (0.01, 0.05, 0.1, 0.2)
    for spec in (
        GeometrySpec("flat_cone", beta=0.5),
        GeometrySpec("perturbed_cone", beta=0.8, amplitude=0.5),
    ):
        grid = RadialGrid.log_uniform(0.1, 1.8, 64)
        bg = instantiate(spec, grid)
        snaps = run_flow(
            bg, StepControl(cfl_fraction=0.9, snapshot_interval=1e-4), 1e-3
        )
        win = uniform_equivalence_window(snaps, bg, deltas)
        ts = [win[d] for d in deltas if win[d] is not None]
        assert ts == sorted(ts)


# --- 4. gauge identities of the connection difference ------------------


def test_conformal_deturck_vector_vanishes():
    # in 2D the trace g^{jk} A^i_{jk} of a conformal deformation cancels
    # identically; only discretization noise remains
    grid = RadialGrid.uniform(0.3, 1.7, 1024)
    bg = instantiate(GeometrySpec("flat_cone", beta=0.8), grid)
    r = grid.r_values
    deformations = (
        1e-4 * np.sin(2.0 * r),
        5e-5 * np.exp(-(((r - 1.0) / 0.2) ** 2)),
    )
    for w in deformations:
        g = MetricField(
            grid, np.exp(2 * w)[:, None, None] * bg.metric.components
        )
        v = calculus.deturck_vector(g, bg)
        assert float(np.max(np.abs(v.values))) <= 1e-8


def test_christoffel_difference_matches_direct_subtraction():
    # A^k_ij computed from background-covariant derivatives of g - g~ must
    # reproduce Gamma(g) - Gamma(g~) built from the same difference
    # stencils; the identity is algebraic, so agreement is at roundoff
    grid = RadialGrid.log_uniform(0.2, 2.0, 128)
    bg = instantiate(GeometrySpec("flat_cone", beta=0.8), grid)
    r = grid.r_values
    gamma_bg = calculus.christoffel(bg.metric).values
    rng = np.random.default_rng(20260826)
    worst = 0.0
    for _ in range(1000):
        a = rng.uniform(-0.05, 0.05, 3)
        ph = rng.uniform(0.0, 2 * np.pi, 3)
        u = sum(a[k] * np.sin((k + 1) * r + ph[k]) for k in range(3))
        b = rng.uniform(-0.02, 0.02) * np.sin(r + rng.uniform(0.0, 2 * np.pi))
        comps = np.exp(2 * u)[:, None, None] * bg.metric.components
        comps[:, 0, 1] += b * 0.8 * r
        comps[:, 1, 0] += b * 0.8 * r
        g = MetricField(grid, comps)
        g.check_spd()
        a_wb = calculus.christoffel_difference(g, bg).values
        a_direct = calculus.christoffel(g).values - gamma_bg
        worst = max(worst, float(np.max(np.abs(a_wb - a_direct))))
    assert worst <= 1e-11


def test_christoffel_difference_on_nonconformal_field_second_order():
    # direct Christoffels of an analytically known metric converge at
    # second order, and the difference route inherits the rate
    errs = {}
    for n in (128, 256):
        grid = RadialGrid.uniform(0.4, 2.4, n)
        bg = instantiate(GeometrySpec("sphere"), grid)
        r = grid.r_values
        w = 0.05 * np.sin(2.0 * r)
        g = MetricField(
            grid, np.exp(2 * w)[:, None, None] * bg.metric.components
        )
        a_wb = calculus.christoffel_difference(g, bg).values
        # reference: exact conformal connection difference
        wp = 0.1 * np.cos(2.0 * r)
        exact = np.zeros_like(a_wb)
        ginv_bg = bg.metric_inverse
        grad = np.zeros((n, 2))
        grad[:, 0] = wp
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    exact[:, k, i, j] = (
                        (i == k) * grad[:, j]
                        + (j == k) * grad[:, i]
                        - bg.metric.components[:, i, j]
                        * np.einsum("pm,pm->p", ginv_bg[:, k, :], grad)
                    )
        errs[n] = float(np.max(np.abs(a_wb - exact)[4:-4]))
    assert errs[256] <= 0.35 * errs[128]


# --- 5. tensor solver vs independent scalar oracle ---------------------


def test_tensor_solver_matches_conformal_oracle():
    spec = GeometrySpec("flat_plane")
    grid = RadialGrid.uniform(0.3, 1.7, 512)
    bg = instantiate(spec, grid)
    r = grid.r_values
    u0 = 0.1 * np.exp(-(((r - 1.0) / 0.2) ** 2))
    u0[0] = u0[-1] = 0.0
    g0 = MetricField(
        grid, np.exp(2 * u0)[:, None, None] * bg.metric.components
    )
    snaps = run_flow(bg, StepControl(cfl_fraction=1.0), 0.1, initial=g0)
    u_t = conformal_scalar_oracle(u0, spec, grid, 0.1, cfl_fraction=1.0)
    ref = np.exp(2 * u_t)[:, None, None] * bg.metric.components
    ref_inv = np.linalg.inv(ref)
    rel = np.einsum("pij,pjk->pik", ref_inv, snaps[-1].g.components - ref)
    assert float(np.max(np.abs(rel))) <= 1e-4


# --- 6. exhaustion convergence on the fixed window ---------------------


def test_perturbed_cone_exhaustion_cauchy_gaps():
    spec = GeometrySpec("perturbed_cone", beta=0.8, amplitude=0.5)
    sched = build_exhaustion(
        rho0=0.2, q=0.5, depth=5, window=(0.4, 0.8), outer_radius=1.6
    )
    ctl = StepControl(cfl_fraction=1.0)
    results = run_exhaustion(sched, spec, ctl, 2e-3)
    rep = diagonal_convergence(results, sched, spec, max_order=1,
                               tolerance=1e-6)
    assert rep.monotone
    assert rep.passed
    for m in (0, 1):
        assert rep.final_gaps[m] <= 1e-6


def test_flat_cone_exhaustion_gaps_negligible():
    spec = GeometrySpec("flat_cone", beta=0.8)
    sched = build_exhaustion(
        rho0=0.2, q=0.5, depth=3, window=(0.4, 0.8), outer_radius=1.6
    )
    results = run_exhaustion(sched, spec, StepControl(cfl_fraction=1.0), 2e-4)
    rep = diagonal_convergence(results, sched, spec, max_order=1,
                               tolerance=1e-10)
    assert rep.passed
    assert all(g <= 1e-10 for v in rep.gaps.values() for g in v)


# --- 7. distance-scaling exponents near the singular end ---------------


def test_scaling_exponents_across_inner_refinements():
    # the perturbed metric is flowed over its flat reference cone so that
    # the audited quantities are genuine connection and curvature gaps;
    # relative to its own background they are second-order residues whose
    # fitted exponents carry no information
    beta, amplitude = 0.8, 0.5
    t_final = 2e-4
    caps = {("grad_g", 1): 1.2, ("deturck", 0): 1.2,
            ("grad_g", 2): 2.2, ("curvature", 0): 2.2}
    t0 = time.perf_counter()
    for inner in (0.1, 0.05, 0.025):
        grid = RadialGrid.log_uniform(inner, 2.0, 128)
        ref = instantiate(GeometrySpec("flat_cone", beta=beta), grid)
        pert = instantiate(
            GeometrySpec("perturbed_cone", beta=beta, amplitude=amplitude),
            grid,
        )
        snaps = run_flow(ref, StepControl(cfl_fraction=1.0), t_final,
                         initial=pert.metric)
        rep = audit_snapshot(
            snaps[-1].g, ref, time=t_final,
            max_grad_order=2, max_curvature_order=0,
        )
        assert len(rep.fits) == len(caps)
        for fit in rep.fits:
            cap = caps[(fit.kind, fit.order)]
            assert fit.slope <= cap, (inner, fit.kind, fit.order, fit.slope)
            assert fit.passed, (inner, fit.kind, fit.order)
            assert not fit.degenerate
    assert time.perf_counter() - t0 < 300.0


# --- 8. quantitative cutoff and barrier toolbox ------------------------


def test_eta_invariants_on_dense_samples():
    eta = make_eta()
    x = np.linspace(-0.5, 1.5, 10**5)
    v, d1, d2 = eta(x), eta.d1(x), eta.d2(x)
    assert np.all(np.abs(d2) <= 8.0)
    assert np.all(d1**2 <= 16.0 * v + 1e-15)
    assert np.all(d1 >= -4.0 * np.sqrt(v) - 1e-15)


def test_xi_gradient_square_bound():
    for delta in (0.2, 0.5, 0.9):
        xi = make_xi("ball", 0.3, delta)
        d = np.linspace(0.0, 2.0, 10**5)
        v, d1 = xi(d), xi.d1(d)
        m = v > 0
        assert np.all(d1[m] ** 2 <= (256.0 / delta**2) * v[m])


def hessian_device_min_eig(variant, r_hi, k0):
    grid = RadialGrid.uniform(0.05, r_hi, 256)
    bg = instantiate(GeometrySpec(variant), grid)
    r = grid.r_values
    delta = 0.5
    xi = make_xi("ball", 0.5, delta)
    # Hess xi = xi'' dr (x) dr + xi' Hess r, and Hess r_ij = -Gamma~^r_ij
    # in a chart with g_rr = 1
    gamma_r = bg.christoffel.values[:, 0, :, :]
    hess = np.zeros((r.size, 2, 2))
    hess[:, 0, 0] = xi.d2(r)
    hess -= xi.d1(r)[:, None, None] * gamma_r
    bound = np.array([xi_hessian_lower_bound(delta, float(d), k0) for d in r])
    form = hess + bound[:, None, None] * bg.metric.components
    # eigenvalues relative to g~ via the diagonal square root
    s = np.stack(
        [np.ones(r.size), 1.0 / np.sqrt(bg.metric.components[:, 1, 1])],
        axis=1,
    )
    sym = form * s[:, :, None] * s[:, None, :]
    return float(np.min(np.linalg.eigvalsh(sym)))


def test_xi_hessian_lower_bound_flat_and_sphere():
    assert hessian_device_min_eig("flat_plane", 2.0, 0.0) >= -1e-8
    assert hessian_device_min_eig("sphere", 2.9, 4.0) >= -1e-8


def test_coth_linear_on_dense_samples():
    rng = np.random.default_rng(3)
    assert coth_linear_check(rng.uniform(1e-9, 200.0, 10**5))


def test_elementary_estimate_dominates_bisection():
    rng = np.random.default_rng(99)
    a = rng.uniform(0.0, 10.0, 10**4)
    b = rng.uniform(0.0, 10.0, 10**4)
    c = rng.uniform(0.0, 10.0, 10**4)
    bounds = np.array([
        elementary_estimate_bound(ai, bi, ci) for ai, bi, ci in zip(a, b, c)
    ])

    def feasible(x):
        return x * x <= a * x**1.5 + b * x + c * np.sqrt(x)

    hi = np.maximum(bounds, 1.0) * 4.0 + 1.0
    assert not np.any(feasible(hi))
    lo = np.zeros_like(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = feasible(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    assert np.all(lo <= bounds + 1e-8)


def test_shi_constants_n_2_through_8():
    for n in range(2, 9):
        assert shi_constant_audit(n).passed


# --- 9. determinism of the report path ---------------------------------


DET_CONFIG = {
    "geometry": {"variant": "perturbed_cone", "beta": 0.8, "amplitude": 0.5},
    "grid": {"n_points": 48, "rho_min": 0.1, "r_max": 1.6},
    "step": {"t_final": 2e-4, "snapshot_cadence": 1e-4},
    "audit": {"deltas": [0.05, 0.1], "max_order": 1},
}


def test_repeated_runs_byte_identical(tmp_path):
    digests = []
    for tag in ("a", "b"):
        cfg = config_from_dict(
            {**DET_CONFIG, "output_dir": str(tmp_path / tag)}
        )
        run_experiment(cfg)
        blobs = []
        for name in ("snapshots.csv", "report.json"):
            with open(tmp_path / tag / name, "rb") as fh:
                blobs.append(fh.read())
        digests.append(blobs)
    assert digests[0] == digests[1]
    # the report must still be well-formed JSON with the audit payloads
    report = json.loads(digests[0][1])
    for key in ("equivalence_window", "profiles", "fits",
                "proof_device_audits", "all_fits_passed"):
        assert key in report

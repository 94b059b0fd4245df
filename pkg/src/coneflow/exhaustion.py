"""Dirichlet problems on a nested family of annuli and their convergence.

The domains D_k = [rho_0 q^k, R_max] share one master log-uniform grid, so
the compact comparison window keeps bitwise-identical grid points across
members: the Cauchy gaps d_k measure only the moving inner boundary, never
interpolation error.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import calculus
from .fields import TensorField
from .flow import StepControl, run_flow
from .grid import RadialGrid
from .models import GeometrySpec, instantiate

MONOTONE_SLACK = 1.1
MONOTONE_FLOOR = 1e-12  # ignores roundoff noise when all gaps are at machine level


@dataclass(frozen=True)
class ExhaustionSchedule:
    rho0: float  # snapped to the master grid
    q: float
    depth: int
    window: tuple
    outer_radius: float
    points_per_segment: int  # grid points per factor-q annulus
    domains: tuple = field(default=None)

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ValueError("q must lie in (0, 1)")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        a, b = self.window
        if not (self.rho0 < a < b < self.outer_radius):
            raise ValueError("window must satisfy rho0 < a < b < R_max")

    @property
    def inner_radii(self):
        return [float(self.domains[k].inner_radius) for k in range(self.depth)]


def build_exhaustion(
    rho0: float,
    q: float,
    depth: int,
    window: tuple,
    outer_radius: float,
    points_per_segment: int = 16,
) -> ExhaustionSchedule:
    """Nested annuli [rho0 q^k, R_max] on one shared log-uniform grid.

    rho0 is snapped to the nearest master grid level so every inner radius
    is an exact grid point; window alignment is then automatic.
    """
    p = int(points_per_segment)
    if p < 4:
        raise ValueError("points_per_segment must be >= 4")
    # master levels: r(j) = R_max * q^(j/p), j = 0 .. J (inward)
    m0 = round(p * math.log(rho0 / outer_radius) / math.log(q))
    if m0 < p:
        raise ValueError("rho0 too close to the outer radius")
    levels_deepest = m0 + (depth - 1) * p
    j = np.arange(levels_deepest, -1, -1, dtype=float)
    master = outer_radius * np.power(q, j / p)
    domains = []
    for k in range(depth):
        start = (depth - 1 - k) * p
        domains.append(RadialGrid(master[start:], "log-uniform"))
    sched = ExhaustionSchedule(
        rho0=float(master[(depth - 1) * p]),
        q=q,
        depth=depth,
        window=tuple(window),
        outer_radius=outer_radius,
        points_per_segment=p,
        domains=tuple(domains),
    )
    return sched


def run_exhaustion(
    schedule: ExhaustionSchedule,
    spec: GeometrySpec,
    control: StepControl,
    t_final: float,
):
    """One Dirichlet run per domain, all to the same snapshot times."""

    def solve(grid):
        bg = instantiate(spec, grid)
        return run_flow(bg, control, t_final)

    threads = int(os.environ.get("RDT_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(solve, schedule.domains))
    return [solve(grid) for grid in schedule.domains]


@dataclass(frozen=True)
class ConvergenceReport:
    gaps: dict  # derivative order -> list of d_k
    final_gaps: dict  # order -> d_{last}
    tolerance: float
    monotone: bool
    passed: bool

    def to_payload(self) -> dict:
        return {
            "gaps": {str(m): list(v) for m, v in self.gaps.items()},
            "final_gaps": {str(m): v for m, v in self.final_gaps.items()},
            "tolerance": self.tolerance,
            "monotone": self.monotone,
            "passed": self.passed,
        }


def diagonal_convergence(
    results,
    schedule: ExhaustionSchedule,
    spec: GeometrySpec,
    max_order: int = 1,
    tolerance: float = 1e-6,
) -> ConvergenceReport:
    """Cauchy gaps d_k = sup over window and time of |g(k+1) - g(k)|.

    Gaps are reported for the raw components (order 0) and background
    covariant derivatives up to max_order, measured in the background norm
    on the shared window grid points.  The pass flag asks for the last gap
    to be below tolerance and the sequence to be nonincreasing within 10%
    slack (an absolute floor absorbs machine noise when every gap is tiny).
    """
    if len(results) < 2:
        return ConvergenceReport({}, {}, tolerance, True, True)
    a, b = schedule.window
    # background and window data per member
    bgs = [instantiate(spec, grid) for grid in schedule.domains]
    masks = []
    for grid in schedule.domains:
        r = grid.r_values
        masks.append((r >= a) & (r <= b))
    r_w = schedule.domains[0].r_values[masks[0]]
    for grid, mask in zip(schedule.domains, masks):
        if not np.array_equal(grid.r_values[mask], r_w):
            raise ValueError("window grid points differ between members")

    gaps = {m: [] for m in range(max_order + 1)}
    n_snap = len(results[0])
    for k in range(len(results) - 1):
        if len(results[k + 1]) != n_snap:
            raise ValueError("mismatched snapshot counts between members")
        worst = {m: 0.0 for m in range(max_order + 1)}
        for s in range(n_snap):
            ga = results[k][s].g
            gb = results[k + 1][s].g
            for m in range(max_order + 1):
                fa = _window_derivative_norm(ga, bgs[k], m)
                fb = _window_derivative_norm(gb, bgs[k + 1], m)
                diff = np.max(np.abs(fa[masks[k]] - fb[masks[k + 1]]))
                worst[m] = max(worst[m], float(diff))
        for m in range(max_order + 1):
            gaps[m].append(worst[m])

    final = {m: v[-1] for m, v in gaps.items()}
    monotone = all(
        v[i + 1] <= MONOTONE_SLACK * v[i] + MONOTONE_FLOOR
        for v in gaps.values()
        for i in range(len(v) - 1)
    )
    passed = monotone and all(v <= tolerance for v in final.values())
    return ConvergenceReport(gaps, final, tolerance, monotone, passed)


def _window_derivative_norm(g, bg, m: int) -> np.ndarray:
    """Pointwise comparison field: components for m = 0, |nabla~^m g| else."""
    if m == 0:
        # sup over components; use the background norm of the deviation
        dev = TensorField(bg.grid, ("d", "d"), g.components - bg.metric.components)
        return calculus.background_norm(dev, bg)
    t = TensorField(bg.grid, ("d", "d"), g.components - bg.metric.components)
    t = calculus.covariant_derivative(t, bg, order=m)
    return calculus.background_norm(t, bg)

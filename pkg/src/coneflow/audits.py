"""Empirical audits of the weighted decay estimates.

Each audit turns a flow snapshot into a per-point profile (a norm against
the distance rho to the singular stratum) and then fits a power law on the
shells with rho <= 1, checking the measured growth rate against the
predicted exponent.  Complete geometries carry the +inf distance sentinel
and every rho-weighted audit reports "not applicable" for them.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from . import calculus
from .background import BackgroundGeometry
from .fields import MetricField, TensorField, relative_eigenvalues

FIT_SLACK = 0.2
MIN_SHELLS = 4
MIN_SPAN = 4.0
DEGENERATE_LEVEL = 1e-13
BOUNDARY_SKIN = 8.0  # multiples of sqrt(t), the parabolic influence length


@dataclass(frozen=True)
class Profile:
    kind: str
    order: int
    time: float
    rho: np.ndarray
    values: np.ndarray

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "order": self.order,
            "time": self.time,
            "rho": [float(x) for x in self.rho],
            "values": [float(x) for x in self.values],
        }


@dataclass(frozen=True)
class ScalingFit:
    kind: str
    order: int
    exponent: float  # predicted growth rate of the 1/rho power
    slope: float  # measured rate (positive = growth toward the tip)
    slack: float
    shells_used: int
    passed: bool
    degenerate: bool = False
    status: str = "ok"

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "order": self.order,
            "exponent": self.exponent,
            "slope": self.slope,
            "slack": self.slack,
            "shells_used": self.shells_used,
            "passed": self.passed,
            "degenerate": self.degenerate,
            "status": self.status,
        }


@dataclass(frozen=True)
class EstimateReport:
    profiles: list
    fits: list

    @property
    def all_passed(self) -> bool:
        return all(f.passed for f in self.fits)

    def to_payload(self) -> dict:
        return {
            "profiles": [p.to_payload() for p in self.profiles],
            "fits": [f.to_payload() for f in self.fits],
            "all_passed": self.all_passed,
        }


def uniform_equivalence_window(snapshots, bg: BackgroundGeometry, deltas) -> dict:
    """Largest snapshot time with all relative eigenvalues within delta of 1.

    For each delta, T_emp(delta) is the last time t such that every
    eigenvalue of g~^{-1} g(s) over the whole grid lies in
    [1 - delta, 1 + delta] for all snapshot times s <= t.
    """
    out = {}
    spreads = []
    for st in snapshots:
        lam = relative_eigenvalues(st.g, bg)
        spreads.append(float(np.max(np.abs(lam - 1.0))))
    for delta in deltas:
        t_emp = None
        for st, spread in zip(snapshots, spreads):
            if spread <= delta:
                t_emp = st.time
            else:
                break
        out[float(delta)] = t_emp
    return out


def _collar_mask(bg: BackgroundGeometry, outer_collar: float, time: float) -> np.ndarray:
    """Excludes collars at both Dirichlet boundaries.

    The relative-compactness hypothesis behind the weighted estimates fails
    for points whose comparison ball leaves the computational domain, and
    the pinned boundary data feeds a parabolic layer of width ~ sqrt(t)
    into the interior.  Points within BOUNDARY_SKIN * sqrt(t) of either
    boundary, or inside the fractional outer collar, are skipped.
    """
    r = bg.grid.r_values
    skin = BOUNDARY_SKIN * math.sqrt(max(time, 0.0))
    cut_hi = min(bg.grid.outer_radius * (1.0 - outer_collar),
                 bg.grid.outer_radius - skin)
    cut_lo = bg.grid.inner_radius + skin
    mask = (r >= cut_lo) & (r <= cut_hi)
    if np.count_nonzero(mask) < MIN_SHELLS:
        raise ValueError("boundary collars leave too few shells")
    return mask


def derivative_profile(
    g: MetricField,
    bg: BackgroundGeometry,
    order: int,
    time: float = 0.0,
    outer_collar: float = 0.1,
) -> Profile:
    """Shellwise |nabla~^order (g - g~)| against rho; order >= 1."""
    if order < 1:
        raise ValueError("derivative_profile needs order >= 1")
    if bg.is_complete:
        return Profile("grad_g", order, time, np.array([]), np.array([]))
    dev = TensorField(bg.grid, ("d", "d"), g.components - bg.metric.components)
    t = calculus.covariant_derivative(dev, bg, order=order)
    vals = calculus.background_norm(t, bg)
    mask = _collar_mask(bg, outer_collar, time)
    return Profile("grad_g", order, time, bg.rho[mask], vals[mask])


def deturck_norm_profile(
    g: MetricField,
    bg: BackgroundGeometry,
    time: float = 0.0,
    outer_collar: float = 0.1,
) -> Profile:
    if bg.is_complete:
        return Profile("deturck", 0, time, np.array([]), np.array([]))
    v = calculus.deturck_vector(g, bg)
    vals = calculus.background_norm(v, bg)
    mask = _collar_mask(bg, outer_collar, time)
    return Profile("deturck", 0, time, bg.rho[mask], vals[mask])


def curvature_profile(
    g: MetricField,
    bg: BackgroundGeometry,
    order: int = 0,
    time: float = 0.0,
    outer_collar: float = 0.1,
) -> Profile:
    """Shellwise |nabla^order Rm(g)|; nabla is the connection of g, built as
    Gamma~ + A, and the norm is still the background norm."""
    if bg.is_complete:
        return Profile("curvature", order, time, np.array([]), np.array([]))
    a = calculus.christoffel_difference(g, bg)
    rm = calculus.riemann_from_background(g, bg, a_field=a)
    gamma_g = TensorField(bg.grid, ("u", "d", "d"), bg.christoffel.values + a.values)
    t = rm
    for _ in range(order):
        t = TensorField(
            bg.grid,
            ("d",) + t.index_types,
            calculus.covariant_derivative_raw(
                bg.grid, t.values, t.index_types, gamma_g.values
            ),
        )
    vals = calculus.background_norm(t, bg)
    mask = _collar_mask(bg, outer_collar, time)
    return Profile("curvature", order, time, bg.rho[mask], vals[mask])


def scaling_exponent_fit(profile: Profile, exponent: float, slack: float = FIT_SLACK) -> ScalingFit:
    """Least-squares slope of log(value) against log(1/rho), shells rho <= 1.

    Passes when the measured growth rate does not exceed the predicted
    exponent by more than the slack.  Needs at least four shells spanning a
    factor of four in rho; a profile that is zero to machine level passes
    with the degenerate flag set.
    """
    if profile.rho.size == 0:
        return ScalingFit(
            profile.kind, profile.order, exponent, 0.0, slack, 0, True,
            status="not applicable",
        )
    sel = profile.rho <= 1.0
    rho = profile.rho[sel]
    vals = profile.values[sel]
    if np.max(vals, initial=0.0) <= DEGENERATE_LEVEL:
        return ScalingFit(
            profile.kind, profile.order, exponent, 0.0, slack,
            int(rho.size), True, degenerate=True,
        )
    keep = vals > DEGENERATE_LEVEL * np.max(vals)
    rho, vals = rho[keep], vals[keep]
    if rho.size < MIN_SHELLS or np.max(rho) / np.min(rho) < MIN_SPAN:
        raise ValueError(
            "need at least four shells spanning a factor of four in rho"
        )
    x = np.log(1.0 / rho)
    y = np.log(vals)
    slope = float(np.polyfit(x, y, 1)[0])
    return ScalingFit(
        profile.kind, profile.order, exponent, slope, slack,
        int(rho.size), slope <= exponent + slack,
    )


def audit_snapshot(
    g: MetricField,
    bg: BackgroundGeometry,
    time: float = 0.0,
    max_grad_order: int = 2,
    max_curvature_order: int = 1,
    outer_collar: float = 0.1,
    slack: float = FIT_SLACK,
) -> EstimateReport:
    """Full shell audit of one snapshot.

    Predicted exponents: |nabla~^m g| grows like 1/rho^m, the de Turck
    vector like 1/rho, |Rm| like 1/rho^2, |nabla^m Rm| like 1/rho^{m+2}.
    """
    profiles = []
    fits = []
    for m in range(1, max_grad_order + 1):
        p = derivative_profile(g, bg, m, time=time, outer_collar=outer_collar)
        profiles.append(p)
        fits.append(scaling_exponent_fit(p, float(m), slack))
    p = deturck_norm_profile(g, bg, time=time, outer_collar=outer_collar)
    profiles.append(p)
    fits.append(scaling_exponent_fit(p, 1.0, slack))
    for m in range(max_curvature_order + 1):
        p = curvature_profile(g, bg, m, time=time, outer_collar=outer_collar)
        profiles.append(p)
        fits.append(scaling_exponent_fit(p, float(m + 2), slack))
    return EstimateReport(profiles, fits)

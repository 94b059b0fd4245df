"""Analytic model geometries on the radial chart.

All variants are rotationally symmetric surfaces with diagonal metric
g = E(r) dr^2 + F(r) dtheta^2 and closed-form Christoffel symbols and
Gaussian curvature.  The curvature tensor is assembled from K through
R^a_{bcd} = K (delta^a_c g_{db} - delta^a_d g_{cb}).

The perturbed cone comes in two profiles:

* "bounded-curvature" (default): an angular stretch f = beta r e^{v(r)}
  with v(r) = (A/10) r^2 (cos(log r) - sin(log r)), chosen so the Gaussian
  curvature is exactly A sin(log r) - v'(r)^2.  Curvature stays bounded
  while |nabla^s K| grows like 1/rho^s, the hypothesis family of the
  weighted estimates.
* "conformal-log-sin": g = e^{2u} (flat cone) with u = A sin(log r), whose
  curvature A e^{-2u} sin(log r)/r^2 is unbounded at the tip.  Useful for
  profile tests of the 1/rho derivative machinery, not for the weighted
  curvature audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import calculus
from .background import BackgroundGeometry
from .errors import DefinitenessError
from .fields import MetricField, TensorField
from .grid import RadialGrid

VARIANTS = (
    "flat_plane",
    "flat_cone",
    "sphere",
    "hyperbolic_plane",
    "hyperbolic_cusp",
    "perturbed_cone",
)

PROFILES = ("bounded-curvature", "conformal-log-sin")


@dataclass(frozen=True)
class GeometrySpec:
    variant: str
    beta: float = 1.0
    amplitude: float = 0.0
    radius: float = 1.0
    profile: str = "bounded-curvature"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown geometry {self.variant!r}; valid: {', '.join(VARIANTS)}"
            )
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.profile not in PROFILES:
            raise ValueError(
                f"unknown profile {self.profile!r}; valid: {', '.join(PROFILES)}"
            )

    @property
    def chart_bounds(self):
        if self.variant == "sphere":
            return (0.0, math.pi * self.radius)
        return (0.0, math.inf)

    @property
    def is_complete(self) -> bool:
        return self.variant in (
            "flat_plane",
            "sphere",
            "hyperbolic_plane",
            "hyperbolic_cusp",
        )


def _chart_functions(spec: GeometrySpec, r: np.ndarray):
    """Returns (E, E', F, F', K) arrays for the diagonal chart metric."""
    one = np.ones_like(r)
    zero = np.zeros_like(r)
    if spec.variant == "flat_plane":
        return one, zero, r**2, 2 * r, zero
    if spec.variant == "flat_cone":
        b2 = spec.beta**2
        return one, zero, b2 * r**2, 2 * b2 * r, zero
    if spec.variant == "sphere":
        R = spec.radius
        f = R * np.sin(r / R)
        fp = np.cos(r / R)
        return one, zero, f**2, 2 * f * fp, one / R**2
    if spec.variant == "hyperbolic_plane":
        f = np.sinh(r)
        fp = np.cosh(r)
        return one, zero, f**2, 2 * f * fp, -one
    if spec.variant == "hyperbolic_cusp":
        f = np.exp(-r)
        fp = -f
        return one, zero, f**2, 2 * f * fp, -one
    if spec.variant == "perturbed_cone":
        A, b = spec.amplitude, spec.beta
        s = np.log(r)
        if spec.profile == "bounded-curvature":
            v = (A / 10.0) * r**2 * (np.cos(s) - np.sin(s))
            vp = (A / 10.0) * r * (np.cos(s) - 3 * np.sin(s))
            f = b * r * np.exp(v)
            fp = b * np.exp(v) * (1 + r * vp)
            K = A * np.sin(s) - vp**2
            return one, zero, f**2, 2 * f * fp, K
        # conformal-log-sin
        u = A * np.sin(s)
        up = A * np.cos(s) / r
        e2u = np.exp(2 * u)
        E = e2u
        Ep = 2 * up * e2u
        F = e2u * (b * r) ** 2
        Fp = 2 * up * F + e2u * 2 * b**2 * r
        K = np.exp(-2 * u) * A * np.sin(s) / r**2
        return E, Ep, F, Fp, K
    raise AssertionError(spec.variant)


def _analytic_christoffel(grid, E, Ep, F, Fp) -> TensorField:
    n = grid.n_points
    gamma = np.zeros((n, 2, 2, 2))
    gamma[:, 0, 0, 0] = Ep / (2 * E)  # Gamma^r_rr
    gamma[:, 0, 1, 1] = -Fp / (2 * E)  # Gamma^r_tt
    gamma[:, 1, 0, 1] = Fp / (2 * F)  # Gamma^t_rt
    gamma[:, 1, 1, 0] = Fp / (2 * F)
    return TensorField(grid, ("u", "d", "d"), gamma)


def _analytic_riemann(grid, g: MetricField, K: np.ndarray) -> TensorField:
    n = grid.n_points
    delta = np.eye(2)
    gc = g.components
    rm = K[:, None, None, None, None] * (
        np.einsum("ac,pdb->pabcd", delta, gc) - np.einsum("ad,pcb->pabcd", delta, gc)
    )
    return TensorField(grid, ("u", "d", "d", "d"), rm)


def distance_to_singularity(spec: GeometrySpec, grid: RadialGrid) -> np.ndarray:
    """Per-point geodesic distance to the singular stratum.

    Cones measure radial arc length to the excised tip; complete variants
    return the +inf sentinel so auditors can skip rho-weighting.
    """
    r = grid.r_values
    if spec.is_complete:
        return np.full_like(r, np.inf)
    if spec.variant == "flat_cone":
        return r.copy()
    if spec.variant == "perturbed_cone":
        if spec.profile == "bounded-curvature":
            return r.copy()  # g_rr = 1, radial lines are unit speed
        A = spec.amplitude

        def integrand(s):
            return math.exp(A * math.sin(math.log(s))) if s > 0 else 1.0

        rho = np.empty_like(r)
        acc = quad(integrand, 0.0, r[0], limit=200)[0]
        rho[0] = acc
        for i in range(1, r.size):
            acc += quad(integrand, r[i - 1], r[i], limit=200)[0]
            rho[i] = acc
        return rho
    raise AssertionError(spec.variant)


def instantiate(spec: GeometrySpec, grid: RadialGrid) -> BackgroundGeometry:
    """Build the background geometry of spec sampled on grid."""
    lo, hi = spec.chart_bounds
    if grid.inner_radius <= lo or grid.outer_radius >= hi:
        raise ValueError(
            f"grid [{grid.inner_radius}, {grid.outer_radius}] outside chart "
            f"bounds ({lo}, {hi}) of {spec.variant}"
        )
    r = grid.r_values
    E, Ep, F, Fp, K = _chart_functions(spec, r)
    if np.any(E <= 0) or np.any(F <= 0):
        raise DefinitenessError(int(np.argmin(np.minimum(E, F))), min(E.min(), F.min()))
    g = MetricField.diagonal(grid, E, F)
    gamma = _analytic_christoffel(grid, E, Ep, F, Fp)
    rm = _analytic_riemann(grid, g, K)
    k0 = float(np.max(4.0 * K**2))
    bg = BackgroundGeometry(
        name=spec.variant,
        grid=grid,
        metric=g,
        christoffel=gamma,
        riemann=rm,
        curvature_bound=k0,
        derivative_bounds={},
        rho=distance_to_singularity(spec, grid)
        if not spec.is_complete
        else np.full_like(r, np.inf),
    )
    bounds = {0: float(np.max(calculus.background_norm(rm, bg)))}
    t = rm
    for s in (1, 2):
        t = calculus.covariant_derivative(t, bg)
        bounds[s] = float(np.max(calculus.background_norm(t, bg)))
    object.__setattr__(bg, "derivative_bounds", bounds)
    return bg


def exact_homothety_solution(spec: GeometrySpec, bg: BackgroundGeometry, t: float) -> MetricField:
    """Exact flow solution g(t) = c(t) g~ for constant-curvature backgrounds.

    Unit-curvature sphere: c(t) = 1 - 2t (t < 1/2).  Curvature -1 models:
    c(t) = 1 + 2t.  Homotheties keep the Christoffels, so V = 0, and in 2D
    Ric(c g~) = K g~ gives c' = -2K.
    """
    if spec.variant == "sphere":
        K = 1.0 / spec.radius**2
        c = 1.0 - 2.0 * K * t
        if c <= 0:
            raise ValueError(f"sphere homothety degenerates at t = {0.5 / K}")
    elif spec.variant in ("hyperbolic_plane", "hyperbolic_cusp"):
        c = 1.0 + 2.0 * t
    else:
        raise ValueError("homothety solution exists only for constant curvature")
    return MetricField(bg.grid, c * bg.metric.components)


def conformal_scalar_oracle(
    u0: np.ndarray,
    spec: GeometrySpec,
    grid: RadialGrid,
    t_final: float,
    cfl_fraction: float = 0.9,
) -> np.ndarray:
    """Independent scalar oracle for 2D conformal flow on flat backgrounds.

    On a flat plane or cone, conformal data g = e^{2u} g~ has V = 0 and the
    flow reduces to du/dt = e^{-2u} lap(u) with lap the flat radial
    Laplacian u'' + u'/r.  Deliberately avoids the tensor machinery: its
    own stencils, its own RK4 loop.  Ends are pinned to u0 (Dirichlet).
    """
    if spec.variant not in ("flat_plane", "flat_cone"):
        raise ValueError("oracle needs a flat plane or flat cone background")
    r = grid.r_values
    u = np.array(u0, dtype=float)
    if u.shape != r.shape:
        raise ValueError("u0 shape mismatch")
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    # interior 3-point weights for u'' and u'
    w2m = 2.0 / (hm * (hm + hp))
    w2c = -2.0 / (hm * hp)
    w2p = 2.0 / (hp * (hm + hp))
    w1m = -hp / (hm * (hm + hp))
    w1c = (hp - hm) / (hm * hp)
    w1p = hm / (hp * (hm + hp))
    rin = r[1:-1]
    h2min = float(np.min(np.concatenate([hm, hp]))) ** 2

    def rhs(u):
        lap = (
            w2m * u[:-2]
            + w2c * u[1:-1]
            + w2p * u[2:]
            + (w1m * u[:-2] + w1c * u[1:-1] + w1p * u[2:]) / rin
        )
        out = np.zeros_like(u)
        out[1:-1] = np.exp(-2.0 * u[1:-1]) * lap
        return out

    t = 0.0
    while t < t_final:
        dt = cfl_fraction * h2min / (4.0 * float(np.max(np.exp(-2.0 * u))))
        dt = min(dt, t_final - t)
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        u[0], u[-1] = u0[0], u0[-1]
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("oracle produced non-finite values")
        t += dt
    return u

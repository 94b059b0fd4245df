"""Cutoff functions, comparison bounds and barrier bookkeeping.

The base profile eta is a quintic smoothstep on the unit interval: C^2,
nonincreasing, identically 1 on (-inf, 0] and 0 on [1, inf).  Its
derivative constants sit inside the budgets |eta''| <= 8,
|eta'|^2 <= 16 eta and eta' >= -4 sqrt(eta) with margin; bump functions
are rescaled compositions xi(d) = eta((d - offset)/width), so their
gradient bounds follow from the unit-interval ones by scaling.  All
derivatives here are analytic, never differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BarrierRangeError

# unit-interval constants of the quintic ramp s(x) = 10x^3 - 15x^4 + 6x^5:
# max |s'| = 15/8, max |s''| = 10/sqrt(3) ~ 5.774, max s'^2/(1-s) ~ 10.8
ETA_D1_BOUND = 4.0
ETA_D2_BOUND = 8.0
ETA_GRAD_SQ_BOUND = 16.0


@dataclass(frozen=True)
class CutoffProfile:
    """Nonincreasing C^2 profile: 1 on (-inf, 0], 0 on [1, inf)."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        return 1.0 - xc**3 * (10.0 - 15.0 * xc + 6.0 * xc**2)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        return np.where((x > 0) & (x < 1), -30.0 * xc**2 * (1.0 - xc) ** 2, 0.0)

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        return np.where(
            (x > 0) & (x < 1), -60.0 * xc * (1.0 - xc) * (1.0 - 2.0 * xc), 0.0
        )


def make_eta() -> CutoffProfile:
    """The cutoff profile; its derivative budgets are pinned in the tests."""
    return CutoffProfile()


@dataclass(frozen=True)
class BumpFunction:
    """xi(d) = eta((d - offset)/width) in the distance variable d.

    Variants: "ball" has plateau on d <= gamma + delta/2 and support inside
    d < gamma + 3 delta/4 (transition width delta/4); "order" moves the
    plateau to gamma + delta/(m+1) with transition width
    delta/(2 m (m+1)); "neighborhood" cuts in the distance to the singular
    set itself, plateau within delta/2, gone past 3 delta/4.
    """

    variant: str
    gamma: float
    delta: float
    order: int
    offset: float
    width: float
    profile: CutoffProfile

    @property
    def plateau_radius(self) -> float:
        return self.offset

    @property
    def support_radius(self) -> float:
        return self.offset + self.width

    def __call__(self, d):
        return self.profile((np.asarray(d, dtype=float) - self.offset) / self.width)

    def d1(self, d):
        x = (np.asarray(d, dtype=float) - self.offset) / self.width
        return self.profile.d1(x) / self.width

    def d2(self, d):
        x = (np.asarray(d, dtype=float) - self.offset) / self.width
        return self.profile.d2(x) / self.width**2

    def gradient_square_bound(self) -> float:
        """C with |xi'|^2 <= C xi pointwise; 256/delta^2 for the ball variant."""
        return ETA_GRAD_SQ_BOUND / self.width**2


def make_xi(
    variant: str,
    gamma: float,
    delta: float,
    order: int = 1,
    profile: CutoffProfile | None = None,
) -> BumpFunction:
    if delta <= 0:
        raise ValueError("delta must be positive")
    if profile is None:
        profile = make_eta()
    if variant == "ball":
        if delta > 1:
            raise ValueError("ball variant requires delta <= 1")
        offset, width = gamma + 0.5 * delta, 0.25 * delta
    elif variant == "order":
        if order < 1:
            raise ValueError("order must be >= 1")
        offset = gamma + delta / (order + 1)
        width = delta / (2 * order * (order + 1))
    elif variant == "neighborhood":
        offset, width = 0.5 * delta, 0.25 * delta
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return BumpFunction(variant, gamma, delta, order, offset, width, profile)


def hessian_comparison_bound(d: float, k0: float) -> float:
    """Upper bound on the Hessian of the distance function orthogonal to
    the radial direction: k0^{1/4} coth(k0^{1/4} d), with 1/d at k0 = 0."""
    if d <= 0:
        raise ValueError("distance must be positive")
    if k0 < 0:
        raise ValueError("curvature bound must be nonnegative")
    if k0 == 0.0:
        return 1.0 / d
    a = k0**0.25
    return a / math.tanh(a * d)


def xi_hessian_lower_bound(delta: float, d: float, k0: float) -> float:
    """B with Hess xi >= -B g~ for the ball-variant cutoff at distance d."""
    return 128.0 / delta**2 + (16.0 / delta) * hessian_comparison_bound(d, k0)


def coth_linear_check(samples) -> bool:
    """z coth z <= 1 + z for all positive z (exact inequality)."""
    z = np.asarray(samples, dtype=float)
    if np.any(z <= 0):
        raise ValueError("samples must be positive")
    return bool(np.all(z / np.tanh(z) <= 1.0 + z))


def elementary_estimate_bound(a: float, b: float, c: float, big_k: float = 3.0) -> float:
    """Root bound for x^2 <= a x^{3/2} + b x + c x^{1/2}, x >= 0.

    Pigeonhole: one of the three terms exceeds x^2/K, which caps x by
    max((K a)^2, K b, (K c)^{2/3}).  When two coefficients vanish the
    single surviving term gives the sharp cap max(a^2, b, c^{2/3}) with no
    term-count factor.
    """
    if min(a, b, c) < 0:
        raise ValueError("coefficients must be nonnegative")
    if big_k < 3.0:
        raise ValueError("term-count factor must be at least 3")
    if sum(1 for v in (a, b, c) if v > 0) <= 1:
        return max(a**2, b, c ** (2.0 / 3.0))
    return max((big_k * a) ** 2, big_k * b, (big_k * c) ** (2.0 / 3.0))


@dataclass(frozen=True)
class ShiAudit:
    n: int
    m: int
    a: int
    eps: Fraction
    m_eps: Fraction
    upper_ok: bool
    lower_ok: bool
    upper_margin: float  # log-domain slack of each inequality
    lower_margin: float

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok and self.m_eps == Fraction(1, 10)

    def to_payload(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "a": self.a,
            "eps": float(self.eps),
            "m_eps_exact_tenth": self.m_eps == Fraction(1, 10),
            "upper_ok": self.upper_ok,
            "lower_ok": self.lower_ok,
            "upper_margin": self.upper_margin,
            "lower_margin": self.lower_margin,
            "passed": self.passed,
        }


def shi_constant_audit(n: int) -> ShiAudit:
    """Consistency audit of the local-smoothing iteration constants.

    With m = 25600 n^10, a = 6400 n^10 and eps = 1/(256000 n^10) the
    product m * eps is exactly 1/10 (checked in exact rationals), the
    geometric head stays small,
        10 n^3 m (1 + eps)^{m-1} <= m^2 / 16,
    and the pair count keeps its bulk,
        m (m-1) / 2 * (1 - eps)^{m-2} >= 3 m^2 / 16.
    Both inequalities are evaluated in log space: the exponents reach
    2.6e7 already at n = 2, so direct powers are useless.
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    m = 25600 * n**10
    a = 6400 * n**10
    eps = Fraction(1, 256000 * n**10)
    e = float(eps)
    upper_margin = (2 * math.log(m) - math.log(16)) - (
        math.log(10 * n**3 * m) + (m - 1) * math.log1p(e)
    )
    lower_margin = (
        math.log(m) + math.log(m - 1) - math.log(2) + (m - 2) * math.log1p(-e)
    ) - (math.log(3) + 2 * math.log(m) - math.log(16))
    return ShiAudit(
        n, m, a, eps, m * eps, upper_margin >= 0, lower_margin >= 0,
        upper_margin, lower_margin,
    )


@dataclass(frozen=True)
class BarrierParams:
    """Dimension-derived barrier constants; m * eps = 1/10 exactly."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")

    @property
    def m(self) -> int:
        return 25600 * self.n**10

    @property
    def a(self) -> int:
        return 6400 * self.n**10

    @property
    def eps(self) -> float:
        return 1.0 / (256000 * self.n**10)

    @property
    def eps_exact(self) -> Fraction:
        return Fraction(1, 256000 * self.n**10)


def barrier_values(lambdas: np.ndarray, grad_norm: np.ndarray, params: BarrierParams):
    """phi = a + sum_k lambda_k^m and psi = phi |nabla~ g|^2, per point.

    lambdas has shape (N, n).  Powers are taken as exp(m log1p(lambda - 1))
    so the near-identity regime keeps full relative accuracy; inputs must
    satisfy |lambda - 1| <= 2 eps, the only regime the barrier argument
    controls, and anything beyond raises.
    """
    lam = np.asarray(lambdas, dtype=float)
    dev = lam - 1.0
    worst = float(np.max(np.abs(dev)))
    if worst > 2 * params.eps:
        raise BarrierRangeError(
            f"eigenvalue deviation {worst:.3e} exceeds 2*eps = {2 * params.eps:.3e}"
        )
    phi = params.a + np.sum(np.exp(params.m * np.log1p(dev)), axis=-1)
    psi = phi * np.asarray(grad_norm, dtype=float) ** 2
    return phi, psi


def order_m_barrier(a0: float, grad_prev_sq: np.ndarray, grad_sq: np.ndarray) -> np.ndarray:
    """Higher-order variant: (a0 + |nabla~^{m-1} g|^2) |nabla~^m g|^2."""
    if a0 < 0:
        raise ValueError("a0 must be nonnegative")
    return (a0 + np.asarray(grad_prev_sq, dtype=float)) * np.asarray(grad_sq, dtype=float)

"""Fixed background geometry: the reference metric and its analytic data.

Every norm, covariant derivative and distance in the flow and in the
auditors is taken against this structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import MetricField, TensorField, inv2x2
from .grid import RadialGrid


@dataclass(frozen=True)
class BackgroundGeometry:
    name: str
    grid: RadialGrid
    metric: MetricField
    christoffel: TensorField  # analytic Gamma~^k_{ij}
    riemann: TensorField  # analytic R~^a_{bcd}
    curvature_bound: float  # k0 with |R~m|^2 <= k0
    derivative_bounds: dict  # order s -> sup |nabla~^s R~m| over the annulus
    rho: np.ndarray  # per-point distance to the singular stratum (inf if complete)
    metric_inverse: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "metric_inverse", inv2x2(self.metric.components))
        self.metric.check_spd()

    @property
    def is_complete(self) -> bool:
        return bool(np.all(np.isinf(self.rho)))

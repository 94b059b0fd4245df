"""Tensor and metric fields sampled on a radial grid.

Components are coordinate components in the (r, theta) chart.  Rotational
symmetry means every component is a function of r alone, so a tensor of
total valence k is stored as an array of shape (N, 2, ..., 2) with k
trailing axes.  Index types are tracked as a tuple of 'u' (contravariant)
and 'd' (covariant) so norms and contractions can raise and lower with the
background metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DefinitenessError
from .grid import RadialGrid

SPD_FLOOR = 1e-12


@dataclass(frozen=True)
class TensorField:
    grid: RadialGrid
    index_types: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        k = len(self.index_types)
        expected = (self.grid.n_points,) + (2,) * k
        if v.shape != expected:
            raise ValueError(f"values shape {v.shape} != expected {expected}")
        if any(t not in ("u", "d") for t in self.index_types):
            raise ValueError("index types must be 'u' or 'd'")
        object.__setattr__(self, "values", v)

    @property
    def valence(self) -> int:
        return len(self.index_types)


def scalar_field(grid: RadialGrid, values: np.ndarray) -> TensorField:
    return TensorField(grid, (), np.asarray(values, dtype=float))


@dataclass(frozen=True)
class MetricField:
    grid: RadialGrid
    components: np.ndarray  # shape (N, 2, 2), symmetric

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.shape != (self.grid.n_points, 2, 2):
            raise ValueError("metric components must have shape (N, 2, 2)")
        c = 0.5 * (c + np.swapaxes(c, 1, 2))
        object.__setattr__(self, "components", c)

    def check_spd(self, t=None, floor: float = SPD_FLOOR):
        lo, _ = sym2x2_eigenvalues(self.components)
        bad = np.where(lo < floor)[0]
        if bad.size:
            i = int(bad[np.argmin(lo[bad])])
            raise DefinitenessError(i, lo[i], t=t)

    def inverse(self) -> np.ndarray:
        return inv2x2(self.components)

    def as_tensor(self) -> TensorField:
        return TensorField(self.grid, ("d", "d"), self.components)

    @classmethod
    def diagonal(cls, grid: RadialGrid, g_rr, g_tt) -> "MetricField":
        c = np.zeros((grid.n_points, 2, 2))
        c[:, 0, 0] = g_rr
        c[:, 1, 1] = g_tt
        return cls(grid, c)


def sym2x2_eigenvalues(m: np.ndarray):
    """Eigenvalues of symmetric 2x2 matrices, vectorized; returns (lo, hi)."""
    a = m[..., 0, 0]
    b = m[..., 1, 1]
    c = m[..., 0, 1]
    tr = a + b
    disc = np.sqrt(np.maximum((a - b) ** 2 + 4 * c * c, 0.0))
    return 0.5 * (tr - disc), 0.5 * (tr + disc)


def inv2x2(m: np.ndarray) -> np.ndarray:
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def relative_eigenvalues(g: MetricField, bg) -> np.ndarray:
    """Sorted eigenvalues of g relative to the background metric.

    Roots of det(g - lambda * g_bg) = 0, i.e. eigenvalues of g_bg^{-1} g.
    Invariant under applying one invertible frame change to both metrics.
    """
    gt = bg.metric.components
    g.check_spd()
    bg.metric.check_spd()
    a = np.einsum("pij,pjk->pik", inv2x2(gt), g.components)
    tr = a[:, 0, 0] + a[:, 1, 1]
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))
    lo = 0.5 * (tr - disc)
    hi = 0.5 * (tr + disc)
    return np.stack([lo, hi], axis=1)

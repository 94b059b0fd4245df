"""Radial grids on an annular chart of a rotationally symmetric surface.

Fields on the surface depend on the radius only, so the chart reduces to a
strictly increasing sequence of radii.  First derivatives are taken with
three-point Lagrange stencils, which are second order on uniform and
non-uniform spacings alike and exact on quadratics; the two end points use
one-sided three-point stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RadialGrid:
    r_values: np.ndarray
    spacing_mode: str  # "uniform" or "log-uniform"
    _stencil: tuple = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        if r.ndim != 1 or r.size < 16:
            raise ValueError("grid needs at least 16 radii")
        if not np.all(np.diff(r) > 0):
            raise ValueError("radii must be strictly increasing")
        if r[0] <= 0:
            raise ValueError("inner radius must be positive")
        if self.spacing_mode not in ("uniform", "log-uniform"):
            raise ValueError(f"unknown spacing_mode {self.spacing_mode!r}")
        if self.spacing_mode == "log-uniform":
            ratios = r[1:] / r[:-1]
            if np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-12:
                raise ValueError("log-uniform grid must have constant ratio")
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "_stencil", _first_derivative_stencil(r))

    @property
    def n_points(self) -> int:
        return self.r_values.size

    @property
    def inner_radius(self) -> float:
        return float(self.r_values[0])

    @property
    def outer_radius(self) -> float:
        return float(self.r_values[-1])

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.r_values)))

    @classmethod
    def uniform(cls, inner: float, outer: float, n: int) -> "RadialGrid":
        return cls(np.linspace(inner, outer, n), "uniform")

    @classmethod
    def log_uniform(cls, inner: float, outer: float, n: int) -> "RadialGrid":
        return cls(np.geomspace(inner, outer, n), "log-uniform")

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """d/dr along axis 0; values has shape (N, ...)."""
        idx, w = self._stencil
        v = np.asarray(values)
        extra = (1,) * (v.ndim - 1)
        out = w[0].reshape(-1, *extra) * v[idx[0]]
        for j in range(1, len(idx)):
            out += w[j].reshape(-1, *extra) * v[idx[j]]
        return out

    def restriction_indices(self, sub: "RadialGrid") -> np.ndarray:
        """Indices of sub's radii inside this grid (bitwise match required)."""
        pos = np.searchsorted(self.r_values, sub.r_values)
        if np.any(pos >= self.n_points) or np.any(
            self.r_values[pos] != sub.r_values
        ):
            raise ValueError("subgrid radii are not grid points of this grid")
        return pos


def _lagrange_derivative_weights(x: float, xs: np.ndarray) -> np.ndarray:
    """Derivative at x of the Lagrange basis over nodes xs."""
    k = xs.size
    w = np.zeros(k)
    for j in range(k):
        denom = np.prod([xs[j] - xs[m] for m in range(k) if m != j])
        total = 0.0
        for i in range(k):
            if i == j:
                continue
            total += np.prod([x - xs[m] for m in range(k) if m != j and m != i])
        w[j] = total / denom
    return w


def _first_derivative_stencil(r: np.ndarray):
    """Lagrange derivative weights per grid point.

    Interior points use centered three-point stencils (second order on any
    spacing).  The two end rows use four-point one-sided stencils (third
    order), so that differentiating a derived field a second time stays
    second order up to the boundary.
    """
    n = r.size
    ia = np.clip(np.arange(n) - 1, 0, n - 3)
    idx3 = (ia, ia + 1, ia + 2)
    x = r
    ra, rb, rc = r[idx3[0]], r[idx3[1]], r[idx3[2]]
    wa = (2 * x - rb - rc) / ((ra - rb) * (ra - rc))
    wb = (2 * x - ra - rc) / ((rb - ra) * (rb - rc))
    wc = (2 * x - ra - rb) / ((rc - ra) * (rc - rb))
    # promote to 4-node form with a zero-weight dummy node
    idx = tuple(np.array(a) for a in idx3) + (np.zeros(n, dtype=int),)
    w = (wa.copy(), wb.copy(), wc.copy(), np.zeros(n))
    for row, nodes in ((0, np.arange(4)), (n - 1, np.arange(n - 4, n))):
        wrow = _lagrange_derivative_weights(r[row], r[nodes])
        for j in range(4):
            idx[j][row] = nodes[j]
            w[j][row] = wrow[j]
    return idx, w

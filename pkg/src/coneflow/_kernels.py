"""Hand-vectorized right-hand-side kernel for the flow engine.

Mathematically identical to the readable route in calculus.py (a unit test
pins the two against each other); contractions over the 2-valued indices
are unrolled because einsum dispatch dominates the cost at these sizes.
"""

from __future__ import annotations

import numpy as np

from .fields import inv2x2


def nabla_metric_deviation(grid, christoffel: np.ndarray, h: np.ndarray) -> np.ndarray:
    """nabla~_a h_ij for a symmetric (0,2) field h; returns [p, a, i, j]."""
    n = h.shape[0]
    out = np.zeros((n, 2, 2, 2))
    out[:, 0] = grid.derivative(h)
    G = christoffel
    for l in (0, 1):
        out -= G[:, l, :, :, None] * h[:, l, None, None, :]
        out -= G[:, l, :, None, :] * h[:, None, :, l, None]
    return out


def rhs(gc: np.ndarray, bg, grid) -> np.ndarray:
    """-2 Ric(g) + nabla_i V_j + nabla_j V_i, raw (N, 2, 2) components."""
    gt = bg.metric.components
    G = bg.christoffel.values
    rm_bg = bg.riemann.values
    ginv = inv2x2(gc)

    dg = nabla_metric_deviation(grid, G, gc - gt)

    # A^k_{ij} = 1/2 g^{km} (nabla_i g_jm + nabla_j g_im - nabla_m g_ij)
    t = dg + dg.transpose(0, 2, 1, 3) - dg.transpose(0, 2, 3, 1)  # [p,i,j,m]
    a = np.zeros_like(dg)  # [p, k, i, j]
    for m in (0, 1):
        a += ginv[:, :, m, None, None] * t[:, None, :, :, m]
    a *= 0.5

    # nabla~_c A^k_{ij} -> [p, c, k, i, j]
    n = gc.shape[0]
    da = np.zeros((n, 2, 2, 2, 2))
    da[:, 0] = grid.derivative(a)
    for z in (0, 1):
        da += G[:, :, :, z].transpose(0, 2, 1)[:, :, :, None, None] * a[:, z, None, None, :, :]
        # covariant corrections for the two lower slots
        da -= G[:, z][:, :, None, :, None] * a[:, None, :, z, :][:, :, :, None, :]
        da -= G[:, z][:, :, None, None, :] * a[:, None, :, :, z][:, :, :, :, None]

    # Rm^a_{bcd} = Rm~ + nabla_c A^a_{db} - nabla_d A^a_{cb} + A A - A A
    rm = rm_bg + da.transpose(0, 2, 4, 1, 3) - da.transpose(0, 2, 4, 3, 1)
    for e in (0, 1):
        rm += a[:, :, :, e][:, :, None, :, None] * a[:, e].transpose(0, 2, 1)[:, None, :, None, :]
        rm -= a[:, :, :, e][:, :, None, None, :] * a[:, e].transpose(0, 2, 1)[:, None, :, :, None]

    ric = rm[:, 0, :, 0, :] + rm[:, 1, :, 1, :]

    # V^i = g^{jk} A^i_{jk}, lowered with g
    v = np.zeros((n, 2))
    for j in (0, 1):
        for k in (0, 1):
            v += ginv[:, j, k, None] * a[:, :, j, k]
    v_low = (gc @ v[:, :, None])[:, :, 0]

    # nabla_a V_j = nabla~_a V_j - A^k_{aj} V_k
    dv = np.zeros((n, 2, 2))
    dv[:, 0] = grid.derivative(v_low)
    for z in (0, 1):
        dv -= G[:, z] * v_low[:, z, None, None]
        dv -= a[:, z] * v_low[:, z, None, None]

    return -2.0 * ric + dv + dv.transpose(0, 2, 1)

"""Figure rendering for the report path.

Figures visualize the same data that goes into snapshots.csv and
report.json; they live in figures/ next to the numeric artifacts and are
not part of the determinism contract.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .fields import relative_eigenvalues


def render_figures(output_dir: str, snapshots, bg, report: dict) -> list:
    fig_dir = os.path.join(output_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    written = []

    r = bg.grid.r_values
    fig, ax = plt.subplots(figsize=(6, 4))
    for st in snapshots:
        lam = relative_eigenvalues(st.g, bg)
        ax.plot(r, lam[:, 0], lw=0.8)
        ax.plot(r, lam[:, 1], lw=0.8)
    ax.set_xlabel("r")
    ax.set_ylabel("relative eigenvalues of g(t)")
    ax.set_title(f"{bg.name}: eigenvalue envelope over time")
    fig.tight_layout()
    path = os.path.join(fig_dir, "eigenvalues.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    profiles = report.get("profiles", [])
    drawable = [p for p in profiles if p.get("rho")]
    if drawable:
        fig, ax = plt.subplots(figsize=(6, 4))
        for p in drawable:
            rho = np.asarray(p["rho"])
            vals = np.asarray(p["values"])
            pos = vals > 0
            if np.any(pos):
                ax.loglog(rho[pos], vals[pos], lw=1.0,
                          label=f"{p['kind']} m={p['order']}")
        ax.set_xlabel("distance to singular stratum")
        ax.set_ylabel("background norm")
        ax.set_title("shell profiles at the final snapshot")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(fig_dir, "profiles.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    conv = report.get("convergence_report")
    if conv and conv.get("gaps"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for order, gaps in sorted(conv["gaps"].items()):
            g = np.asarray(gaps, dtype=float)
            ax.semilogy(np.arange(1, g.size + 1), np.maximum(g, 1e-18),
                        marker="o", label=f"order {order}")
        ax.set_xlabel("exhaustion step k")
        ax.set_ylabel("Cauchy gap d_k")
        ax.set_title("diagonal convergence on the window")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(fig_dir, "convergence.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written

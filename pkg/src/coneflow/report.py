"""Experiment orchestration and deterministic artifact emission.

A run writes, under the configured output directory:
  snapshots.csv   bulk per-point profile data (t, r, metric, eigenvalues)
  report.json     audits, fits, equivalence window, convergence, pass flags
  manifest.json   config hash, grid summary, package versions
  figures/*.png   rendered views of the same data (not determinism-hashed)

CSV and JSON content is a pure function of the config: floats are printed
with 17 significant digits and no wall-clock data enters either file, so
rerunning an identical config reproduces them byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .audits import audit_snapshot, uniform_equivalence_window
from .config import ExperimentConfig
from .cutoffs import shi_constant_audit
from .errors import ConeflowError
from .exhaustion import build_exhaustion, diagonal_convergence, run_exhaustion
from .fields import relative_eigenvalues
from .flow import StepControl, run_flow
from .grid import RadialGrid
from .models import GeometrySpec, instantiate


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _geometry_spec(cfg: ExperimentConfig) -> GeometrySpec:
    g = cfg.geometry
    return GeometrySpec(g.variant, beta=g.beta, amplitude=g.amplitude,
                        radius=g.radius, profile=g.profile)


def _build_grid(cfg: ExperimentConfig, spec: GeometrySpec) -> RadialGrid:
    lo, hi = spec.chart_bounds
    r_max = cfg.grid.r_max
    if hi < np.inf and r_max >= hi:
        r_max = 0.95 * hi
    if cfg.grid.spacing_mode == "uniform":
        return RadialGrid.uniform(cfg.grid.rho_min, r_max, cfg.grid.n_points)
    return RadialGrid.log_uniform(cfg.grid.rho_min, r_max, cfg.grid.n_points)


def _write_snapshots_csv(path: str, snapshots, bg):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "r", "g_rr", "g_rtheta", "g_thetatheta",
                    "lambda_min", "lambda_max"])
        for st in snapshots:
            lam = relative_eigenvalues(st.g, bg)
            gc = st.g.components
            for i, r in enumerate(bg.grid.r_values):
                w.writerow([
                    _fmt(st.time), _fmt(r),
                    _fmt(gc[i, 0, 0]), _fmt(gc[i, 0, 1]), _fmt(gc[i, 1, 1]),
                    _fmt(lam[i, 0]), _fmt(lam[i, 1]),
                ])


def _canonical_json(doc) -> str:
    def clean(x):
        if isinstance(x, dict):
            return {k: clean(v) for k, v in sorted(x.items())}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, (np.floating, float)):
            return float(_fmt(x))
        if isinstance(x, np.integer):
            return int(x)
        return x

    return json.dumps(clean(doc), indent=1, sort_keys=True) + "\n"


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Runs the flow, audits, and optional exhaustion; writes all artifacts.

    Returns the report document.  Guard aborts (loss of definiteness,
    non-finite values) and config errors propagate as ConeflowError; the
    CLI turns those into a structured error JSON and nonzero exit.
    """
    spec = _geometry_spec(cfg)
    grid = _build_grid(cfg, spec)
    bg = instantiate(spec, grid)
    control = StepControl(
        cfl_fraction=cfg.step.cfl_fraction,
        t_final=cfg.step.t_final,
        snapshot_interval=cfg.step.snapshot_cadence,
    )
    snapshots = run_flow(bg, control, cfg.step.t_final)

    last = snapshots[-1]
    estimate = audit_snapshot(
        last.g, bg, time=last.time,
        max_grad_order=cfg.audit.max_order,
        outer_collar=cfg.audit.outer_collar,
        slack=cfg.audit.exponent_slack,
    )
    window = uniform_equivalence_window(snapshots, bg, cfg.audit.deltas)

    convergence = None
    if cfg.exhaustion is not None:
        ex = cfg.exhaustion
        sched = build_exhaustion(
            rho0=ex.rho_0, q=ex.q, depth=ex.depth, window=ex.window,
            outer_radius=grid.outer_radius,
            points_per_segment=ex.points_per_segment,
        )
        results = run_exhaustion(sched, spec, control, cfg.step.t_final)
        convergence = diagonal_convergence(results, sched, spec, max_order=1)

    report = {
        "geometry": cfg.geometry.variant,
        "equivalence_window": {repr(k): v for k, v in window.items()},
        "profiles": [p.to_payload() for p in estimate.profiles],
        "fits": [f.to_payload() for f in estimate.fits],
        "proof_device_audits": {
            "shi_constants": [shi_constant_audit(n).to_payload()
                              for n in range(2, 9)],
        },
        "convergence_report": convergence.to_payload() if convergence else None,
        "all_fits_passed": estimate.all_passed,
    }

    os.makedirs(cfg.output_dir, exist_ok=True)
    csv_path = os.path.join(cfg.output_dir, "snapshots.csv")
    _write_snapshots_csv(csv_path, snapshots, bg)
    report_path = os.path.join(cfg.output_dir, "report.json")
    with open(report_path, "w") as fh:
        fh.write(_canonical_json(report))

    config_json = cfg.to_json()
    manifest = {
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(config_json.encode()).hexdigest(),
        "grid": {
            "n_points": grid.n_points,
            "spacing_mode": grid.spacing_mode,
            "inner_radius": grid.inner_radius,
            "outer_radius": grid.outer_radius,
        },
        "versions": {
            "coneflow": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "artifacts": ["snapshots.csv", "report.json"],
    }
    with open(os.path.join(cfg.output_dir, "manifest.json"), "w") as fh:
        fh.write(_canonical_json(manifest))

    try:
        from .figures import render_figures

        render_figures(cfg.output_dir, snapshots, bg, report)
    except ConeflowError:
        raise
    except Exception as ex:  # figures never block the numeric artifacts
        print(f"warning: figure rendering failed: {ex}", file=sys.stderr)
    return report


def audit_stored_snapshots(csv_path: str) -> dict:
    """Re-runs the auditors on a stored snapshots.csv.

    The sibling manifest.json supplies the geometry and grid; the CSV
    supplies the metric data.  Returns a report document (not written).
    """
    from .config import config_from_dict

    manifest_path = os.path.join(os.path.dirname(csv_path) or ".", "manifest.json")
    if not os.path.exists(manifest_path):
        raise ConeflowError(f"no manifest.json next to {csv_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    cfg = config_from_dict(manifest["config"])
    spec = _geometry_spec(cfg)

    rows = {}
    with open(csv_path) as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.setdefault(float(row["t"]), []).append(row)
    if not rows:
        raise ConeflowError(f"no data rows in {csv_path}")
    times = sorted(rows)
    r = np.array([float(x["r"]) for x in rows[times[0]]])
    grid = RadialGrid(r, cfg.grid.spacing_mode)
    bg = instantiate(spec, grid)

    from .fields import MetricField
    from .flow import FlowState

    snapshots = []
    for t in times:
        data = rows[t]
        gc = np.zeros((len(data), 2, 2))
        for i, row in enumerate(data):
            gc[i, 0, 0] = float(row["g_rr"])
            gc[i, 0, 1] = gc[i, 1, 0] = float(row["g_rtheta"])
            gc[i, 1, 1] = float(row["g_thetatheta"])
        snapshots.append(FlowState(time=t, g=MetricField(grid, gc)))

    last = snapshots[-1]
    estimate = audit_snapshot(
        last.g, bg, time=last.time,
        max_grad_order=cfg.audit.max_order,
        outer_collar=cfg.audit.outer_collar,
        slack=cfg.audit.exponent_slack,
    )
    window = uniform_equivalence_window(snapshots, bg, cfg.audit.deltas)
    return {
        "geometry": cfg.geometry.variant,
        "equivalence_window": {repr(k): v for k, v in window.items()},
        "profiles": [p.to_payload() for p in estimate.profiles],
        "fits": [f.to_payload() for f in estimate.fits],
        "all_fits_passed": estimate.all_passed,
    }

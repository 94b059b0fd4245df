"""Command line harness.

Verbs:
  run <config.json>   run an experiment and write its artifacts
  list                enumerate the built-in geometry variants
  describe <name>     print the hypothesis constants a variant instantiates
  audit <csv>         re-run the auditors on a stored snapshots.csv
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import parse_config
from .errors import ConeflowError, DefinitenessError, NonFiniteError
from .models import GeometrySpec, VARIANTS, instantiate
from .grid import RadialGrid

_DESCRIPTIONS = {
    "flat_plane": "complete flat plane, K = 0; stationary under the flow",
    "flat_cone": "flat cone dr^2 + (beta r)^2 dtheta^2, incomplete at r = 0",
    "sphere": "round sphere of the given radius; shrinking homothety",
    "hyperbolic_plane": "complete hyperbolic plane, K = -1; expanding homothety",
    "hyperbolic_cusp": "complete hyperbolic cusp, K = -1; expanding homothety",
    "perturbed_cone": "cone with a log-periodic curvature perturbation",
}


def _describe(name: str) -> str:
    if name not in VARIANTS:
        raise ConeflowError(
            f"unknown geometry {name!r}; valid names: {', '.join(VARIANTS)}"
        )
    spec = GeometrySpec(
        name,
        beta=0.8 if name in ("flat_cone", "perturbed_cone") else 1.0,
        amplitude=0.5 if name == "perturbed_cone" else 0.0,
    )
    lo, hi = spec.chart_bounds
    grid = RadialGrid.log_uniform(0.05, min(2.0, 0.9 * hi), 64)
    bg = instantiate(spec, grid)
    lines = [
        f"{name}: {_DESCRIPTIONS[name]}",
        f"  complete: {spec.is_complete}",
        f"  chart bounds: ({lo:g}, {hi:g})",
        f"  curvature bound k0 = sup |Rm|^2: {bg.curvature_bound:.6g}",
    ]
    for order in sorted(bg.derivative_bounds):
        lines.append(
            f"  c_{order} = sup |nabla~^{order} Rm|: "
            f"{bg.derivative_bounds[order]:.6g}"
        )
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="coneflow",
        description="Ricci de Turck flow laboratory for conical surfaces",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    sub.add_parser("list", help="list built-in geometry variants")
    p_desc = sub.add_parser("describe", help="describe one geometry variant")
    p_desc.add_argument("name")
    p_audit = sub.add_parser("audit", help="re-audit a stored snapshots.csv")
    p_audit.add_argument("csv")
    args = parser.parse_args(argv)

    try:
        if args.verb == "list":
            for name in VARIANTS:
                print(f"{name:18s} {_DESCRIPTIONS[name]}")
            return 0
        if args.verb == "describe":
            print(_describe(args.name))
            return 0
        if args.verb == "run":
            from .report import run_experiment

            cfg = parse_config(args.config)
            report = run_experiment(cfg)
            print(json.dumps({
                "status": "ok",
                "output_dir": cfg.output_dir,
                "all_fits_passed": report["all_fits_passed"],
            }))
            return 0
        if args.verb == "audit":
            from .report import audit_stored_snapshots

            report = audit_stored_snapshots(args.csv)
            print(json.dumps(report, indent=1, sort_keys=True))
            return 0
    except ConeflowError as ex:
        err = {"status": "error", "kind": type(ex).__name__, "message": str(ex)}
        if isinstance(ex, (DefinitenessError, NonFiniteError)):
            err["grid_index"] = ex.index
            if ex.t is not None:
                err["time"] = ex.t
        print(json.dumps(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Experiment configuration: a JSON document validated before any compute.

Unknown keys are rejected so a typo never silently falls back to a
default.  Parsing and serialization round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .models import PROFILES, VARIANTS

_GEOMETRY_KEYS = {"variant", "beta", "amplitude", "radius", "profile"}
_GRID_KEYS = {"n_points", "spacing_mode", "rho_min", "r_max"}
_STEP_KEYS = {"cfl_fraction", "t_final", "snapshot_cadence"}
_EXHAUSTION_KEYS = {"rho_0", "q", "depth", "window", "points_per_segment"}
_AUDIT_KEYS = {"deltas", "max_order", "exponent_slack", "outer_collar"}
_TOP_KEYS = {"geometry", "grid", "step", "exhaustion", "audit", "output_dir"}


@dataclass(frozen=True)
class GeometryConfig:
    variant: str
    beta: float = 1.0
    amplitude: float = 0.0
    radius: float = 1.0
    profile: str = "bounded-curvature"


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 128
    spacing_mode: str = "log-uniform"
    rho_min: float = 0.05
    r_max: float = 2.0


@dataclass(frozen=True)
class StepConfig:
    cfl_fraction: float = 0.9
    t_final: float = 1e-3
    snapshot_cadence: float | None = None


@dataclass(frozen=True)
class ExhaustionConfig:
    rho_0: float = 0.2
    q: float = 0.5
    depth: int = 3
    window: tuple = (0.4, 0.8)
    points_per_segment: int = 16


@dataclass(frozen=True)
class AuditConfig:
    deltas: tuple = (0.05, 0.1, 0.2)
    max_order: int = 2
    exponent_slack: float = 0.2
    outer_collar: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometryConfig
    grid: GridConfig = field(default_factory=GridConfig)
    step: StepConfig = field(default_factory=StepConfig)
    exhaustion: ExhaustionConfig | None = None
    audit: AuditConfig = field(default_factory=AuditConfig)
    output_dir: str = "out"

    def to_dict(self) -> dict:
        d = {
            "geometry": asdict(self.geometry),
            "grid": asdict(self.grid),
            "step": asdict(self.step),
            "audit": dict(asdict(self.audit), deltas=list(self.audit.deltas)),
            "output_dir": self.output_dir,
        }
        if self.exhaustion is not None:
            d["exhaustion"] = dict(
                asdict(self.exhaustion), window=list(self.exhaustion.window)
            )
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(section: dict, allowed: set, name: str):
    unknown = set(section) - allowed
    _require(not unknown, f"unknown key(s) in {name}: {', '.join(sorted(unknown))}")


def _number(section: dict, key: str, name: str, default=None):
    v = section.get(key, default)
    _require(isinstance(v, (int, float)) and not isinstance(v, bool),
             f"{name}.{key} must be a number")
    return v


def config_from_dict(doc: dict) -> ExperimentConfig:
    _require(isinstance(doc, dict), "config must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "config")
    _require("geometry" in doc, "config.geometry is required")

    geo = doc["geometry"]
    _require(isinstance(geo, dict), "config.geometry must be an object")
    _check_keys(geo, _GEOMETRY_KEYS, "geometry")
    _require("variant" in geo, "geometry.variant is required")
    _require(geo["variant"] in VARIANTS,
             f"geometry.variant must be one of {', '.join(VARIANTS)}")
    profile = geo.get("profile", "bounded-curvature")
    _require(profile in PROFILES,
             f"geometry.profile must be one of {', '.join(PROFILES)}")
    beta = _number(geo, "beta", "geometry", 1.0)
    _require(0.0 < beta <= 1.0, "geometry.beta must be in (0, 1]")
    radius = _number(geo, "radius", "geometry", 1.0)
    _require(radius > 0, "geometry.radius must be positive")
    geometry = GeometryConfig(
        variant=geo["variant"],
        beta=float(beta),
        amplitude=float(_number(geo, "amplitude", "geometry", 0.0)),
        radius=float(radius),
        profile=profile,
    )

    gr = doc.get("grid", {})
    _require(isinstance(gr, dict), "config.grid must be an object")
    _check_keys(gr, _GRID_KEYS, "grid")
    n_points = gr.get("n_points", 128)
    _require(isinstance(n_points, int) and n_points >= 16,
             "grid.n_points must be an integer >= 16")
    mode = gr.get("spacing_mode", "log-uniform")
    _require(mode in ("uniform", "log-uniform"),
             "grid.spacing_mode must be 'uniform' or 'log-uniform'")
    rho_min = _number(gr, "rho_min", "grid", 0.05)
    r_max = _number(gr, "r_max", "grid", 2.0)
    _require(0 < rho_min < r_max, "grid needs 0 < rho_min < r_max")
    grid = GridConfig(n_points, mode, float(rho_min), float(r_max))

    st = doc.get("step", {})
    _require(isinstance(st, dict), "config.step must be an object")
    _check_keys(st, _STEP_KEYS, "step")
    cfl = _number(st, "cfl_fraction", "step", 0.9)
    _require(0.0 < cfl <= 1.0, "step.cfl_fraction must be in (0,1]")
    t_final = _number(st, "t_final", "step", 1e-3)
    _require(t_final >= 0, "step.t_final must be >= 0")
    cadence = st.get("snapshot_cadence")
    if cadence is not None:
        _require(isinstance(cadence, (int, float)) and cadence > 0,
                 "step.snapshot_cadence must be a positive number")
        cadence = float(cadence)
    step = StepConfig(float(cfl), float(t_final), cadence)

    exhaustion = None
    if "exhaustion" in doc:
        ex = doc["exhaustion"]
        _require(isinstance(ex, dict), "config.exhaustion must be an object")
        _check_keys(ex, _EXHAUSTION_KEYS, "exhaustion")
        q = _number(ex, "q", "exhaustion", 0.5)
        _require(0.0 < q < 1.0, "exhaustion.q must be in (0,1)")
        depth = ex.get("depth", 3)
        _require(isinstance(depth, int) and depth >= 1,
                 "exhaustion.depth must be an integer >= 1")
        window = ex.get("window", [0.4, 0.8])
        _require(
            isinstance(window, (list, tuple)) and len(window) == 2
            and all(isinstance(x, (int, float)) for x in window),
            "exhaustion.window must be a pair of numbers",
        )
        _require(window[0] < window[1], "window must be increasing")
        pps = ex.get("points_per_segment", 16)
        _require(isinstance(pps, int) and pps >= 4,
                 "exhaustion.points_per_segment must be an integer >= 4")
        rho_0 = _number(ex, "rho_0", "exhaustion", 0.2)
        _require(rho_0 > 0, "exhaustion.rho_0 must be positive")
        _require(window[0] > rho_0, "window must lie inside the smallest domain")
        exhaustion = ExhaustionConfig(
            float(rho_0), float(q), depth,
            (float(window[0]), float(window[1])), pps,
        )

    au = doc.get("audit", {})
    _require(isinstance(au, dict), "config.audit must be an object")
    _check_keys(au, _AUDIT_KEYS, "audit")
    deltas = au.get("deltas", [0.05, 0.1, 0.2])
    _require(
        isinstance(deltas, (list, tuple)) and len(deltas) > 0
        and all(isinstance(x, (int, float)) and 0 < x < 1 for x in deltas),
        "audit.deltas must be a nonempty list of numbers in (0,1)",
    )
    max_order = au.get("max_order", 2)
    _require(isinstance(max_order, int) and max_order >= 1,
             "audit.max_order must be an integer >= 1")
    slack = _number(au, "exponent_slack", "audit", 0.2)
    _require(slack > 0, "audit.exponent_slack must be positive")
    collar = _number(au, "outer_collar", "audit", 0.1)
    _require(0 <= collar < 0.5, "audit.outer_collar must be in [0, 0.5)")
    audit = AuditConfig(tuple(float(x) for x in deltas), max_order,
                        float(slack), float(collar))

    out = doc.get("output_dir", "out")
    _require(isinstance(out, str) and out, "output_dir must be a nonempty string")

    return ExperimentConfig(geometry, grid, step, exhaustion, audit, out)


def parse_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as ex:
        raise ConfigError(f"config is not valid JSON: {ex}")
    return config_from_dict(doc)

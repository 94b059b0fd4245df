"""Numerical laboratory for Ricci de Turck flow on rotationally symmetric
surfaces with conical singularities: model geometries, a well-balanced
flow engine, domain-exhaustion convergence studies, and empirical audits
of weighted decay estimates and their proof devices."""

__version__ = "0.1.0"

from .background import BackgroundGeometry
from .errors import (
    BarrierRangeError,
    ConeflowError,
    ConfigError,
    DefinitenessError,
    NonFiniteError,
)
from .fields import MetricField, TensorField, relative_eigenvalues
from .flow import DirichletProblem, FlowState, StepControl, run_dirichlet, run_flow
from .grid import RadialGrid
from .models import GeometrySpec, instantiate

__all__ = [
    "BackgroundGeometry",
    "BarrierRangeError",
    "ConeflowError",
    "ConfigError",
    "DefinitenessError",
    "DirichletProblem",
    "FlowState",
    "GeometrySpec",
    "MetricField",
    "NonFiniteError",
    "RadialGrid",
    "StepControl",
    "TensorField",
    "instantiate",
    "relative_eigenvalues",
    "run_dirichlet",
    "run_flow",
    "__version__",
]

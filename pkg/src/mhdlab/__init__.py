"""Pseudo-spectral laboratory for nonhomogeneous incompressible heat-conducting MHD."""

from .fields import Grid, ScalarField, VectorField
from .solver import PhysicalConstants, SchemeConfig, State, step
from .config import ScenarioSpec, load_config
from .runner import run_scenario

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "PhysicalConstants",
    "SchemeConfig",
    "State",
    "step",
    "ScenarioSpec",
    "load_config",
    "run_scenario",
]

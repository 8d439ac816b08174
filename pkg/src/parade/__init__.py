"""Simulation and verification of the penguin parade model."""

from .engine import Event, EngineError, SolverSettings, Trajectory, simulate
from .model import FunctionSpec, HerdState, ModelError, ModelParams, make_spec
from .scenarios import ScenarioConfig, ScenarioError, builtin_scenarios, parse_scenario

__all__ = [
    "Event",
    "EngineError",
    "FunctionSpec",
    "HerdState",
    "ModelError",
    "ModelParams",
    "ScenarioConfig",
    "ScenarioError",
    "SolverSettings",
    "Trajectory",
    "builtin_scenarios",
    "make_spec",
    "parse_scenario",
    "simulate",
]

"""Three-dimensional aircraft conflict resolution by clustering conflicts per
flight level and dispersing top contributors across levels, with an RF-leg arc
solver for each level."""

from .engine import initialize_levels, run_iteration, solve
from .model import (
    Assignment,
    FlightSpec,
    MinDistanceEvent,
    PosTime,
    Scenario,
    ScenarioError,
    Sector,
    SolutionReport,
    SolverParams,
    validate_scenario,
)
from .rfleg import RFLegSolver
from .scengen import GenConfig, generate

__all__ = [
    "Assignment",
    "FlightSpec",
    "GenConfig",
    "MinDistanceEvent",
    "PosTime",
    "RFLegSolver",
    "Scenario",
    "ScenarioError",
    "Sector",
    "SolutionReport",
    "SolverParams",
    "generate",
    "initialize_levels",
    "run_iteration",
    "solve",
    "validate_scenario",
]

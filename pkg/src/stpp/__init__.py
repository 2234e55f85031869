"""Shipper transportation planning: routing and bin consolidation over a rolling horizon."""
from .config import ILSConfig, LocalSearchConfig, PerturbConfig, SolverConfig
from .construct import constructive
from .costing import CostBreakdown, evaluate, validate
from .generator import GeneratorParams, generate, preset
from .io import load_instance, load_plan, save_instance, write_plan
from .model import Instance
from .perturb import ils
from .solution import Solution

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "GeneratorParams", "ILSConfig", "Instance", "LocalSearchConfig",
    "PerturbConfig", "Solution", "SolverConfig", "constructive", "evaluate", "generate", "ils",
    "load_instance", "load_plan", "preset", "save_instance", "validate", "write_plan",
]

"""Weighted-sum utility energy efficiency allocation for secure uplink users."""

from .baselines import (BaselineConfig, alternating, optimize_bandwidth_only,
                        optimize_power_only)
from .errors import BracketError, DomainError, SolverError
from .inner import DualParams, InnerSolution, solve_p3
from .model import (Allocation, ProblemInstance, UserParams, check_feasible,
                    rate, secrecy_rate, uee, weighted_sum_uee)
from .outer import NewtonConfig, SolveReport, solve
from .scenario import ScenarioSpec, generate, preset_utility
from .special import RootConfig, find_root_decreasing, lambert_w0
from .utility import CustomUtility, Type1, Type2, Type3, validate_spec

__all__ = [
    "Allocation", "BaselineConfig", "BracketError", "CustomUtility", "DomainError",
    "DualParams", "InnerSolution", "NewtonConfig", "ProblemInstance", "RootConfig",
    "ScenarioSpec", "SolveReport", "SolverError", "Type1", "Type2", "Type3", "UserParams",
    "alternating", "check_feasible", "find_root_decreasing", "generate", "lambert_w0",
    "optimize_bandwidth_only", "optimize_power_only", "preset_utility", "rate",
    "secrecy_rate", "solve", "solve_p3", "uee", "validate_spec", "weighted_sum_uee",
]

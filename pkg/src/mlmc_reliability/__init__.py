"""Multilevel Monte Carlo estimation of expected system lifetime.

Systems are two-terminal networks of components described by their minimal
cut sets. Levels are nested subsets of the cut sets chosen from a pilot
simulation, and the estimator telescopes over them.
"""

__version__ = "0.1.0"

from .distributions import Exponential, ParameterError, Weibull, make_rng
from .system import (
    CapacityError,
    Component,
    Network,
    StructureError,
    System,
    enumerate_min_cutsets,
    eval_lifetime,
    is_failed,
    validate_system,
)
from .generator import GrowthConfig, grow, grow_nested
from .simulator import (
    ContractError,
    sample_coupled,
    sample_coupled_repairable,
    sample_lifetime,
    sample_lifetime_repairable,
)
from .levels import LevelPartition, PilotData, build_partition, pilot_scores
from .estimators import EstimateResult, LevelStats, McConfig, run_levels, run_mc, run_mlmc, total_cost
from .diagnostics import RateReport, fit_rates, speedup_curve

__all__ = [
    "Weibull",
    "Exponential",
    "ParameterError",
    "make_rng",
    "Network",
    "Component",
    "System",
    "StructureError",
    "CapacityError",
    "enumerate_min_cutsets",
    "eval_lifetime",
    "is_failed",
    "validate_system",
    "GrowthConfig",
    "grow",
    "grow_nested",
    "ContractError",
    "sample_lifetime",
    "sample_coupled",
    "sample_lifetime_repairable",
    "sample_coupled_repairable",
    "PilotData",
    "LevelPartition",
    "pilot_scores",
    "build_partition",
    "McConfig",
    "LevelStats",
    "EstimateResult",
    "run_mc",
    "run_mlmc",
    "run_levels",
    "total_cost",
    "RateReport",
    "fit_rates",
    "speedup_curve",
]

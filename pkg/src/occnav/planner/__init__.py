from .energy import EnergyModel, path_energy
from .search import HybridPath, search_hybrid, SearchConfig
from .pipeline import (
    PlannerConfig,
    PlanResult,
    Setpoint,
    plan,
    select_setpoint,
    speed_compensation,
)

__all__ = [
    "EnergyModel",
    "path_energy",
    "HybridPath",
    "search_hybrid",
    "SearchConfig",
    "PlannerConfig",
    "PlanResult",
    "Setpoint",
    "plan",
    "select_setpoint",
    "speed_compensation",
]

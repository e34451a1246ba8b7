from .world import ScenarioWorld, generate_world, save_world, load_world
from .sensor import SensorModel, sense
from .trial import TrialConfig, TrialResult, BenchmarkAggregate, run_trial, run_benchmark

__all__ = [
    "ScenarioWorld",
    "generate_world",
    "save_world",
    "load_world",
    "SensorModel",
    "sense",
    "TrialConfig",
    "TrialResult",
    "BenchmarkAggregate",
    "run_trial",
    "run_benchmark",
]

from .bspline import BSplineTrajectory, evaluate, active_control_points
from .costs import (
    CostWeights,
    ObjectiveReport,
    cost_smoothness,
    cost_collision,
    cost_limits,
    cost_curvature,
    total_objective,
)
from .optimizer import OptimizeOptions, optimize

__all__ = [
    "BSplineTrajectory",
    "evaluate",
    "active_control_points",
    "CostWeights",
    "ObjectiveReport",
    "cost_smoothness",
    "cost_collision",
    "cost_limits",
    "cost_curvature",
    "total_objective",
    "OptimizeOptions",
    "optimize",
]

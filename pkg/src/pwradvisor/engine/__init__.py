"""Receding-horizon predictive advisory engine."""

from .estimator import StateEstimator, estimate_state
from .objective import objective_eval
from .plan import (ControlPlan, PlanBlock, Recommendation, RecommendationRow,
                   SolveDiagnostics, Trajectory, blocking_pattern)
from .predict import predict
from .replan import ReplanScheduler
from .solver import EngineConfig, solve

__all__ = [
    "ControlPlan", "PlanBlock", "Trajectory", "Recommendation",
    "RecommendationRow", "SolveDiagnostics", "blocking_pattern",
    "predict", "objective_eval", "solve", "EngineConfig",
    "estimate_state", "StateEstimator", "ReplanScheduler",
]

from .core import (
    PlannerConfig,
    PolicySnapshot,
    RunStats,
    lspi_plan,
    plan,
    politex_agent_probs,
    politex_plan,
    politex_sample,
    query_budget,
    rollout,
    sample_action,
)
from .fast import FastExecutor, fast_path_available
from .params import TheoremParameters, theorem_parameters

__all__ = [
    "FastExecutor",
    "PlannerConfig",
    "PolicySnapshot",
    "RunStats",
    "TheoremParameters",
    "fast_path_available",
    "lspi_plan",
    "plan",
    "politex_agent_probs",
    "politex_plan",
    "politex_sample",
    "query_budget",
    "rollout",
    "sample_action",
    "theorem_parameters",
]

from .base import (
    ActionVector,
    EnvironmentSpec,
    LocalAccessError,
    LocalAccessSimulator,
    StateHandle,
    Transition,
    make_env,
    make_feature_map,
)
from .coordination import CoordinationEnv, coordination_feature_map
from .dp import (
    FactorModel,
    JointModel,
    ProductModel,
    VIResult,
    evaluate_factorized_policy,
    evaluate_joint_policy,
    evaluate_joint_policy_table,
    factor_value_iteration,
    tabular_value_iteration,
)
from .grid import ChainEnv, EngineTables, Grid4Env, ProductChainEnv, TabularProductEnv

__all__ = [
    "ActionVector",
    "ChainEnv",
    "CoordinationEnv",
    "EngineTables",
    "EnvironmentSpec",
    "FactorModel",
    "Grid4Env",
    "JointModel",
    "LocalAccessError",
    "LocalAccessSimulator",
    "ProductChainEnv",
    "ProductModel",
    "StateHandle",
    "TabularProductEnv",
    "Transition",
    "VIResult",
    "coordination_feature_map",
    "evaluate_factorized_policy",
    "evaluate_joint_policy",
    "evaluate_joint_policy_table",
    "factor_value_iteration",
    "make_env",
    "make_feature_map",
    "tabular_value_iteration",
]

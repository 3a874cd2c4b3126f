"""
观点操控模块：受控环境、PPO策略与进化算法基线
"""

from pyodrs.control.environment import (
    EXEMPLAR_TARGET,
    ControlConfig,
    ControlOutcome,
    EnvState,
    ManipulationEnv,
    average_deviation,
    controlled_step,
    extended_weights,
    fixed_env_factory,
    random_env_factory,
    reward,
    rollout,
    trajectory_cost,
    uncontrolled_outcome,
)
from pyodrs.control.networks import MlpParams, actor_forward, critic_forward, parameter_count
from pyodrs.control.ppo import (
    PolicyParams,
    PPOConfig,
    TrainingCurve,
    evaluate_policy,
    init_policy,
    load_policy,
    observe,
    ppo_train,
    sample_action,
    save_policy,
)
from pyodrs.control.evolution import EAConfig, EAResult, Individual, decode_genome, ea_optimize, fitness

__all__ = [
    "EXEMPLAR_TARGET",
    "ControlConfig",
    "ControlOutcome",
    "EnvState",
    "ManipulationEnv",
    "average_deviation",
    "controlled_step",
    "extended_weights",
    "fixed_env_factory",
    "random_env_factory",
    "reward",
    "rollout",
    "trajectory_cost",
    "uncontrolled_outcome",
    "MlpParams",
    "actor_forward",
    "critic_forward",
    "parameter_count",
    "PolicyParams",
    "PPOConfig",
    "TrainingCurve",
    "evaluate_policy",
    "init_policy",
    "load_policy",
    "observe",
    "ppo_train",
    "sample_action",
    "save_policy",
    "EAConfig",
    "EAResult",
    "Individual",
    "decode_genome",
    "ea_optimize",
    "fitness",
]

"""Content-creator competition games, reward mechanisms and their welfare."""

from creatorgame.dynamics import DynamicsConfig, Trajectory, sim_stra
from creatorgame.environments import (
    EmbeddingIngestSpec,
    ScenarioVariant,
    SyntheticSpec,
    ingest_embeddings,
    make_synthetic,
    make_tvn,
)
from creatorgame.kernels import BACKEND
from creatorgame.mechanisms import (
    MechanismError,
    MechanismSpec,
    PiecewiseConstantFn,
    check_merit_based,
    check_monotone,
    reward_matrix,
    rewards,
    shapley_mediator,
)
from creatorgame.model import (
    ActionSpace,
    AttentionWeights,
    CostSpec,
    GameError,
    GameInstance,
    ScoreFunctionSpec,
    ScoreProfile,
    StrategyProfile,
    UserPopulation,
    dcg5,
    perturbed_attention_weights,
    score,
)
from creatorgame.optimizer import OptimizerConfig, optimize_brcm, project_to_polytope
from creatorgame.oracle import (
    EquilibriumReport,
    enumerate_pne,
    tvn_closed_forms,
    verify_corollary1,
    verify_theorem1,
)
from creatorgame.welfare import (
    WelfareReport,
    creator_utility,
    potential,
    social_welfare,
    user_welfare,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActionSpace",
    "AttentionWeights",
    "CostSpec",
    "DynamicsConfig",
    "EmbeddingIngestSpec",
    "EquilibriumReport",
    "GameError",
    "GameInstance",
    "MechanismError",
    "MechanismSpec",
    "OptimizerConfig",
    "PiecewiseConstantFn",
    "ScenarioVariant",
    "ScoreFunctionSpec",
    "ScoreProfile",
    "StrategyProfile",
    "SyntheticSpec",
    "Trajectory",
    "UserPopulation",
    "WelfareReport",
    "check_merit_based",
    "check_monotone",
    "creator_utility",
    "dcg5",
    "enumerate_pne",
    "ingest_embeddings",
    "make_synthetic",
    "make_tvn",
    "optimize_brcm",
    "perturbed_attention_weights",
    "potential",
    "project_to_polytope",
    "reward_matrix",
    "rewards",
    "score",
    "shapley_mediator",
    "sim_stra",
    "social_welfare",
    "tvn_closed_forms",
    "user_welfare",
    "verify_corollary1",
    "verify_theorem1",
]

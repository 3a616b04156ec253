"""scalebench: a benchmark suite for RL-driven horizontal scaling of a
replicated network service."""

__version__ = "0.1.0"

from .envmdp import (
    EpisodeConfig,
    Observation,
    ScalingEnv,
    StepOutcome,
    decode_action,
    encode_action,
    normalize_observation,
)
from .rewards import (
    PROFILES,
    MrpState,
    OptimizationProfile,
    RewardRange,
    RewardSpec,
    SlaSpec,
    normalize_return,
    reward_range,
    rfn1,
    rfn2,
    rfn3,
)
from .simcore import QueueState, ReplicaPool, SimParams, SlotResult, apply_scaling, step_slot
from .stats import WelchResult, welch_t_test
from .workload import WorkloadConfig, WorkloadTrace, generate, split

__all__ = [
    "EpisodeConfig",
    "MrpState",
    "Observation",
    "OptimizationProfile",
    "PROFILES",
    "QueueState",
    "ReplicaPool",
    "RewardRange",
    "RewardSpec",
    "ScalingEnv",
    "SimParams",
    "SlaSpec",
    "SlotResult",
    "StepOutcome",
    "WelchResult",
    "WorkloadConfig",
    "WorkloadTrace",
    "apply_scaling",
    "decode_action",
    "encode_action",
    "generate",
    "normalize_observation",
    "normalize_return",
    "reward_range",
    "rfn1",
    "rfn2",
    "rfn3",
    "split",
    "step_slot",
    "welch_t_test",
]

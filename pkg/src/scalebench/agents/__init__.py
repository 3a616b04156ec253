from .baselines import RandomAgent, ThresholdAgent
from .checkpoint import load_policy, save_policy
from .dqn import DqnAgent, DqnHyperparams, ReplayBuffer
from .nets import Adam, Mlp
from .ppo import PpoAgent, PpoHyperparams, Rollout, RolloutCollector, gae

__all__ = [
    "Adam",
    "DqnAgent",
    "DqnHyperparams",
    "Mlp",
    "PpoAgent",
    "PpoHyperparams",
    "RandomAgent",
    "ReplayBuffer",
    "Rollout",
    "RolloutCollector",
    "ThresholdAgent",
    "gae",
    "load_policy",
    "save_policy",
]

"""Non-learning reference agents."""
from __future__ import annotations

import numpy as np

from ..envmdp import Observation
from ..rewards import SlaSpec


class RandomAgent:
    """Uniform random actions; has no deterministic mode, but the seeded
    generator makes evaluation runs reproducible."""

    algorithm = "random"

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def select_action(self, obs: Observation, deterministic: bool = False) -> int:
        return int(self._rng.integers(0, 3))


class ThresholdAgent:
    """Classic CPU-threshold scaler: add above the tolerance band around
    the CPU target, remove below it, otherwise hold."""

    algorithm = "threshold"

    def __init__(self, sla: SlaSpec, seed: int = 0):
        self.sla = sla
        self.seed = seed

    def select_action(self, obs: Observation, deterministic: bool = False) -> int:
        upper = self.sla.c_tgt * (1.0 + self.sla.epsilon)
        lower = self.sla.c_tgt * (1.0 - self.sla.epsilon)
        if obs.c_bar > upper:
            return 2  # add
        if obs.c_bar < lower:
            return 0  # remove
        return 1

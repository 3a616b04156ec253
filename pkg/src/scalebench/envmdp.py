"""The scaling MDP environment.

Glues the workload trace and the slot simulator into the usual
reset/step loop: the observation is (active replicas, mean CPU %, peak
latency), actions are replica deltas {-1, 0, +1}, rewards come from the
configured reward function, and an episode ends either by termination
(attempting to exceed the replica cap, or peak latency above the
inadmissible bound, both paying a flat -100) or by truncation at
``max_steps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StateError
from .rewards import RewardSpec, SlaSpec, step_reward
from .simcore import QueueState, ReplicaPool, SimParams, apply_scaling, step_slot
from .workload import WorkloadTrace

ACTION_DELTAS = (-1, 0, 1)
TERMINATION_PENALTY = -100.0


@dataclass(frozen=True)
class Observation:
    v: int
    c_bar: float
    d: float


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = 3600
    penalty_on_termination: float = TERMINATION_PENALTY

    def validate(self) -> None:
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class StepOutcome:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict = field(default_factory=dict)


def encode_action(index: int) -> int:
    """Categorical action index 0/1/2 -> replica delta -1/0/+1."""
    if index not in (0, 1, 2):
        raise ValueError(f"action index must be 0, 1 or 2, got {index!r}")
    return ACTION_DELTAS[index]


def decode_action(delta: int) -> int:
    """Replica delta -1/0/+1 -> categorical action index 0/1/2."""
    if delta not in ACTION_DELTAS:
        raise ValueError(f"action delta must be -1, 0 or +1, got {delta!r}")
    return ACTION_DELTAS.index(delta)


def normalize_observation(obs: Observation, params: SimParams, sla: SlaSpec) -> np.ndarray:
    """Scale the observation into [0,1]^3 for network input."""
    return np.array(
        [
            obs.v / params.max_replicas_cap,
            obs.c_bar / 100.0,
            min(obs.d, sla.d_terminate) / sla.d_terminate,
        ],
        dtype=np.float64,
    )


def sample_start_slot(seed: int, trace_len: int, max_steps: int) -> int:
    """Seeded uniform draw of a training-episode start slot.

    Shared by the in-process trainer and the bridge server so that a seed
    maps to the same episode on both paths.
    """
    high = trace_len - max_steps
    if high < 0:
        raise ValueError(f"trace of {trace_len} slots is shorter than max_steps={max_steps}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return int(rng.integers(0, high + 1))


class ScalingEnv:
    """Single-threaded environment over one trace window.

    The episode consumes the warm-up slot plus one trace slot per step,
    indexed modulo the trace length; the reset precondition
    ``start_slot + max_steps <= len(trace)`` means at most the final step
    can wrap onto slot 0.
    """

    def __init__(
        self,
        trace: WorkloadTrace,
        reward_spec: RewardSpec,
        params: SimParams | None = None,
        episode: EpisodeConfig | None = None,
    ):
        self.trace = trace
        self.reward_spec = reward_spec
        self.params = params if params is not None else SimParams()
        self.episode = episode if episode is not None else EpisodeConfig()
        self.params.validate()
        self.episode.validate()
        reward_spec.validate()
        self.sla = reward_spec.sla
        self._active = False
        self._pool = None
        self._queue = None
        self._cursor = 0
        self._steps = 0
        self._prev_d = 0.0

    def reset(self, start_slot: int = 0) -> Observation:
        """Deploy the initial scenario and process one warm-up slot."""
        if not 0 <= start_slot <= len(self.trace) - self.episode.max_steps:
            raise ValueError(
                f"start_slot {start_slot} leaves no room for {self.episode.max_steps} "
                f"steps in a {len(self.trace)}-slot trace"
            )
        pool = ReplicaPool(self.params.initial_replicas, 0, 0)
        queue = QueueState.empty()
        pool, queue, slot = step_slot(pool, queue, self.trace[start_slot], self.params)
        self._pool, self._queue = pool, queue
        self._cursor = start_slot + 1
        self._steps = 0
        self._active = True
        obs = Observation(v=pool.active, c_bar=slot.mean_cpu_c, d=slot.peak_latency_d)
        self._prev_d = obs.d
        return obs

    def step(self, delta: int) -> StepOutcome:
        if not self._active:
            raise StateError("step() called on an inactive episode; call reset() first")
        pool, cap_violation = apply_scaling(self._pool, delta, self.params)
        arrivals = self.trace[self._cursor % len(self.trace)]
        self._cursor += 1
        pool, queue, slot = step_slot(pool, self._queue, arrivals, self.params)
        self._pool, self._queue = pool, queue

        obs = Observation(v=pool.active, c_bar=slot.mean_cpu_c, d=slot.peak_latency_d)
        latency_violation = slot.peak_latency_d > self.sla.d_terminate
        terminated = cap_violation or latency_violation
        if terminated:
            reward = self.episode.penalty_on_termination
        else:
            reward = step_reward(self.reward_spec, self._prev_d, delta, obs.d, obs.c_bar)
        self._prev_d = obs.d

        self._steps += 1
        truncated = (not terminated) and self._steps >= self.episode.max_steps
        if terminated or truncated:
            self._active = False
        info = {
            "slot": self._cursor - 1,
            "arrivals": arrivals,
            "completed_jobs": slot.completed_jobs,
            "queue_len": slot.queue_len,
            "cap_violation": cap_violation,
            "latency_violation": latency_violation,
        }
        return StepOutcome(obs, reward, terminated, truncated, info)

    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def active(self) -> bool:
        return self._active

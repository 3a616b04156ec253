"""Deep Q-network agent: epsilon-greedy Q-learning over a small MLP with
an experience-replay ring buffer and a periodically synced target network.

The online and target networks are fully separate (no shared layers).
Ties in the greedy argmax resolve to the lowest action index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envmdp import Observation
from .nets import Adam, Mlp, seed_streams

N_ACTIONS = 3


@dataclass(frozen=True)
class DqnHyperparams:
    gamma: float = 0.99
    learning_rate: float = 1e-4
    hidden: tuple[int, int] = (64, 64)
    replay_capacity: int = 50000
    batch_size: int = 64
    target_sync_interval: int = 1000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 50000

    def validate(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0,1], got {self.gamma}")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay_capacity must be >= batch_size")
        if self.epsilon_decay_steps < 1:
            raise ValueError("epsilon_decay_steps must be >= 1")


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int, obs_dim: int = 3):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminated = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._head = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, terminated) -> None:
        i = self._head
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.terminated[i] = terminated
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_obs[idx],
            self.terminated[idx],
        )


class DqnAgent:
    algorithm = "dqn"

    def __init__(self, hp: DqnHyperparams, seed: int, normalizer):
        hp.validate()
        self.hp = hp
        self.seed = seed
        self.normalizer = normalizer
        init_rng, self._action_rng, self._sample_rng = seed_streams(seed, 3)
        sizes = (3, *hp.hidden, N_ACTIONS)
        self.q_net = Mlp(sizes, init_rng)
        self.target_net = self.q_net.clone()
        self.optimizer = Adam(self.q_net.parameters(), hp.learning_rate)
        self.env_steps = 0
        self.updates = 0
        self.replay = ReplayBuffer(hp.replay_capacity)
        self.last_loss = 0.0

    # -- acting ---------------------------------------------------------

    def q_values(self, obs_vec) -> np.ndarray:
        out, _ = self.q_net.forward(np.asarray(obs_vec))
        return out[0]

    def current_epsilon(self) -> float:
        frac = min(1.0, self.env_steps / self.hp.epsilon_decay_steps)
        return self.hp.epsilon_start + frac * (self.hp.epsilon_end - self.hp.epsilon_start)

    def act(self, obs_vec, epsilon: float) -> int:
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0,1], got {epsilon}")
        if epsilon > 0.0 and self._action_rng.random() < epsilon:
            return int(self._action_rng.integers(0, N_ACTIONS))
        return int(np.argmax(self.q_values(obs_vec)))

    def select_action(self, obs: Observation, deterministic: bool = False) -> int:
        vec = self.normalizer(obs)
        if deterministic:
            return self.act(vec, 0.0)
        return self.act(vec, self.current_epsilon())

    # -- learning -------------------------------------------------------

    def observe(self, obs_vec, action: int, reward: float, next_obs_vec, terminated: bool) -> None:
        """Record one transition and run one learning update when possible."""
        self.replay.push(obs_vec, action, reward, next_obs_vec, terminated)
        self.env_steps += 1
        if len(self.replay) >= self.hp.batch_size:
            self.update()

    def td_targets(self, rewards, next_obs, terminated) -> np.ndarray:
        q_next, _ = self.target_net.forward(next_obs)
        return rewards + self.hp.gamma * q_next.max(axis=1) * (~np.asarray(terminated))

    def loss_and_grads(self, obs, actions, targets):
        """Mean squared TD error and its analytic parameter gradients."""
        batch = len(actions)
        q_all, cache = self.q_net.forward(obs)
        q_sa = q_all[np.arange(batch), actions]
        err = q_sa - targets
        loss = float(np.mean(err ** 2))
        grad_q = np.zeros_like(q_all)
        grad_q[np.arange(batch), actions] = 2.0 * err / batch
        grads, _ = self.q_net.backward(cache, grad_q)
        return loss, grads

    def update(self) -> float:
        if len(self.replay) == 0:
            return 0.0
        obs, actions, rewards, next_obs, terminated = self.replay.sample(
            self.hp.batch_size, self._sample_rng
        )
        targets = self.td_targets(rewards, next_obs, terminated)
        loss, grads = self.loss_and_grads(obs, actions, targets)
        self.optimizer.step(grads)
        self.updates += 1
        if self.updates % self.hp.target_sync_interval == 0:
            self.target_net.copy_weights_from(self.q_net)
        self.last_loss = loss
        return loss

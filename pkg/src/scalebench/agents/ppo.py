"""Proximal policy optimization with a clipped surrogate objective and
generalized advantage estimation.

The actor and critic share the 64-64 feature trunk; the policy head emits
logits over the three actions and the value head a scalar.  Rollouts are
collected across episode boundaries with terminal masking, advantages are
normalized per update batch, and updates run several epochs of shuffled
minibatches.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envmdp import Observation, encode_action
from .nets import Adam, Mlp, log_softmax, seed_streams, softmax

N_ACTIONS = 3


@dataclass(frozen=True)
class PpoHyperparams:
    gamma: float = 0.99
    learning_rate: float = 3e-4
    hidden: tuple[int, int] = (64, 64)
    clip_ratio: float = 0.2
    gae_lambda: float = 0.95
    rollout_length: int = 2048
    update_epochs: int = 10
    minibatch_size: int = 64
    value_coef: float = 0.5
    entropy_coef: float = 0.0

    def validate(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0,1], got {self.gamma}")
        if self.clip_ratio <= 0:
            raise ValueError(f"clip_ratio must be positive, got {self.clip_ratio}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0,1], got {self.gae_lambda}")
        if self.rollout_length < 1 or self.update_epochs < 1 or self.minibatch_size < 1:
            raise ValueError("rollout_length, update_epochs and minibatch_size must be >= 1")


@dataclass
class Rollout:
    obs: np.ndarray        # (T, 3)
    actions: np.ndarray    # (T,)
    logprobs: np.ndarray   # (T,)
    values: np.ndarray     # (T + 1,), last entry bootstraps the cut-off state
    rewards: np.ndarray    # (T,)
    terminals: np.ndarray  # (T,) episode ended after this step
    episodes: int          # episodes completed inside this rollout

    def __len__(self) -> int:
        return len(self.rewards)


def gae(rewards, values, terminals, gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates.

    ``values`` must be one longer than ``rewards`` (bootstrap value of the
    state after the last step); ``terminals`` masks both the bootstrap and
    the recursive accumulation at episode boundaries.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    n = len(rewards)
    if len(values) != n + 1:
        raise ValueError(f"values must have length {n + 1}, got {len(values)}")
    if len(terminals) != n:
        raise ValueError(f"terminals must have length {n}, got {len(terminals)}")
    advantages = np.zeros(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        live = 0.0 if terminals[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * live - values[t]
        acc = delta + gamma * lam * live * acc
        advantages[t] = acc
    return advantages


class PpoAgent:
    algorithm = "ppo"

    def __init__(self, hp: PpoHyperparams, seed: int, normalizer):
        hp.validate()
        self.hp = hp
        self.seed = seed
        self.normalizer = normalizer
        init_rng, self._action_rng, self._shuffle_rng = seed_streams(seed, 3)
        self.trunk = Mlp((3, *hp.hidden), init_rng, activate_final=True)
        self.policy_head = Mlp((hp.hidden[-1], N_ACTIONS), init_rng)
        self.value_head = Mlp((hp.hidden[-1], 1), init_rng)
        self.parameters = (
            self.trunk.parameters()
            + self.policy_head.parameters()
            + self.value_head.parameters()
        )
        self.optimizer = Adam(self.parameters, hp.learning_rate)

    # -- acting ---------------------------------------------------------

    def _forward(self, obs_batch):
        feats, trunk_cache = self.trunk.forward(obs_batch)
        logits, policy_cache = self.policy_head.forward(feats)
        values, value_cache = self.value_head.forward(feats)
        return logits, values[:, 0], (trunk_cache, policy_cache, value_cache)

    def action_distribution(self, obs_vec) -> np.ndarray:
        logits, _, _ = self._forward(np.asarray(obs_vec))
        return softmax(logits)[0]

    def policy_step(self, obs_vec) -> tuple[int, float, float]:
        """Sample an action; returns (action index, log-prob, state value)."""
        logits, values, _ = self._forward(np.asarray(obs_vec))
        logp = log_softmax(logits)[0]
        probs = np.exp(logp)
        u = self._action_rng.random()
        action = int(np.searchsorted(np.cumsum(probs), u))
        action = min(action, N_ACTIONS - 1)
        return action, float(logp[action]), float(values[0])

    def state_value(self, obs_vec) -> float:
        _, values, _ = self._forward(np.asarray(obs_vec))
        return float(values[0])

    def select_action(self, obs: Observation, deterministic: bool = False) -> int:
        vec = self.normalizer(obs)
        if deterministic:
            logits, _, _ = self._forward(vec)
            return int(np.argmax(logits[0]))
        action, _, _ = self.policy_step(vec)
        return action

    # -- learning -------------------------------------------------------

    def loss_and_grads(self, obs, actions, old_logprobs, advantages, returns):
        """Clipped-surrogate + value + entropy loss with analytic gradients.

        Advantages are used as given (normalize before calling).
        """
        hp = self.hp
        batch = len(actions)
        rows = np.arange(batch)
        logits, values, caches = self._forward(obs)
        trunk_cache, policy_cache, value_cache = caches

        logp_all = log_softmax(logits)
        probs = np.exp(logp_all)
        logp_a = logp_all[rows, actions]
        ratio = np.exp(logp_a - old_logprobs)
        clipped = np.clip(ratio, 1.0 - hp.clip_ratio, 1.0 + hp.clip_ratio)
        surr_raw = ratio * advantages
        surr_clip = clipped * advantages
        policy_loss = -float(np.mean(np.minimum(surr_raw, surr_clip)))

        entropy_per = -np.sum(probs * logp_all, axis=1)
        entropy = float(np.mean(entropy_per))

        value_err = values - returns
        value_loss = float(np.mean(value_err ** 2))

        # d(policy loss)/d logp_a: the raw branch contributes ratio * A,
        # the clipped branch only while the clip is inactive.
        raw_active = surr_raw <= surr_clip
        clip_inactive = (ratio > 1.0 - hp.clip_ratio) & (ratio < 1.0 + hp.clip_ratio)
        grad_logp = np.where(raw_active | clip_inactive, ratio * advantages, 0.0)
        grad_logits = (-grad_logp / batch)[:, None] * (
            np.eye(N_ACTIONS)[actions] - probs
        )
        # entropy bonus: d(-coef * H)/d logits
        if hp.entropy_coef != 0.0:
            grad_logits += hp.entropy_coef / batch * probs * (logp_all + entropy_per[:, None])

        grad_values = (2.0 * hp.value_coef / batch) * value_err

        policy_grads, dfeat_p = self.policy_head.backward(policy_cache, grad_logits)
        value_grads, dfeat_v = self.value_head.backward(value_cache, grad_values[:, None])
        trunk_grads, _ = self.trunk.backward(trunk_cache, dfeat_p + dfeat_v)

        total = policy_loss + hp.value_coef * value_loss - hp.entropy_coef * entropy
        grads = trunk_grads + policy_grads + value_grads
        return total, (policy_loss, value_loss, entropy), grads

    def update(self, rollout: Rollout) -> tuple[float, float, float]:
        """Run the clipped-objective epochs over one rollout."""
        hp = self.hp
        n = len(rollout)
        if n == 0:
            return 0.0, 0.0, 0.0
        advantages = gae(
            rollout.rewards, rollout.values, rollout.terminals, hp.gamma, hp.gae_lambda
        )
        returns = advantages + rollout.values[:-1]
        if n >= 2:
            advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
        policy_losses, value_losses, entropies = [], [], []
        for _ in range(hp.update_epochs):
            order = self._shuffle_rng.permutation(n)
            for lo in range(0, n, hp.minibatch_size):
                idx = order[lo:lo + hp.minibatch_size]
                _, (pl, vl, ent), grads = self.loss_and_grads(
                    rollout.obs[idx],
                    rollout.actions[idx],
                    rollout.logprobs[idx],
                    advantages[idx],
                    returns[idx],
                )
                self.optimizer.step(grads)
                policy_losses.append(pl)
                value_losses.append(vl)
                entropies.append(ent)
        return (
            float(np.mean(policy_losses)),
            float(np.mean(value_losses)),
            float(np.mean(entropies)),
        )


class RolloutCollector:
    """Streams environment steps into fixed-size rollouts.

    Episodes are concatenated: when one ends, the next reset happens
    lazily on the following step, and the boundary is recorded in the
    rollout's terminal mask.  ``episode_budget`` cuts a rollout short at
    the boundary that completes the budgeted number of episodes.
    """

    def __init__(self, agent: PpoAgent, env, reset_fn):
        self.agent = agent
        self.env = env
        self.reset_fn = reset_fn
        self._obs_vec = None

    def collect(self, n_steps: int, episode_budget: int | None = None) -> Rollout:
        obs_rows, actions, logprobs, values, rewards, terminals = [], [], [], [], [], []
        episodes = 0
        for _ in range(n_steps):
            if self._obs_vec is None or not self.env.active:
                self._obs_vec = self.agent.normalizer(self.reset_fn(self.env))
            action, logp, value = self.agent.policy_step(self._obs_vec)
            outcome = self.env.step(encode_action(action))
            done = outcome.terminated or outcome.truncated
            obs_rows.append(self._obs_vec)
            actions.append(action)
            logprobs.append(logp)
            values.append(value)
            rewards.append(outcome.reward)
            terminals.append(done)
            self._obs_vec = self.agent.normalizer(outcome.observation)
            if done:
                self._obs_vec = None
                episodes += 1
                if episode_budget is not None and episodes >= episode_budget:
                    break
        if self._obs_vec is None:
            bootstrap = 0.0  # episode boundary; masked by the terminal flag
        else:
            bootstrap = self.agent.state_value(self._obs_vec)
        return Rollout(
            obs=np.asarray(obs_rows),
            actions=np.asarray(actions, dtype=np.int64),
            logprobs=np.asarray(logprobs),
            values=np.asarray(values + [bootstrap]),
            rewards=np.asarray(rewards, dtype=np.float64),
            terminals=np.asarray(terminals, dtype=bool),
            episodes=episodes,
        )

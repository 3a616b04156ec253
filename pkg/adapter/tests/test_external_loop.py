"""An off-the-shelf RL training loop (tutorial-style torch DQN) driving the
remote environment through nothing but the standard reset/step/space API."""
import random
from collections import deque

import numpy as np
import torch
from torch import nn

from scalebench_client import RemoteScalingEnv

GAMMA = 0.99
BATCH_SIZE = 64
BUFFER_SIZE = 10000
MIN_REPLAY = 200
EPS_START, EPS_END, EPS_DECAY_STEPS = 1.0, 0.05, 800
TARGET_SYNC = 100
TOTAL_STEPS = 1200


def build_net(obs_dim: int, n_actions: int) -> nn.Module:
    return nn.Sequential(
        nn.Linear(obs_dim, 64), nn.Tanh(),
        nn.Linear(64, 64), nn.Tanh(),
        nn.Linear(64, n_actions),
    )


def test_external_training_loop_runs_1000_steps(server_address):
    torch.manual_seed(0)
    random.seed(0)

    env = RemoteScalingEnv(server_address, split="train")
    env.action_space.seed(0)
    obs_dim = env.observation_space.shape[0]
    scale = np.maximum(env.observation_space.high, 1e-9)

    policy = build_net(obs_dim, env.action_space.n)
    target = build_net(obs_dim, env.action_space.n)
    target.load_state_dict(policy.state_dict())
    optimizer = torch.optim.Adam(policy.parameters(), lr=1e-3)
    buffer: deque = deque(maxlen=BUFFER_SIZE)

    def normalize(obs):
        return torch.as_tensor(obs / scale, dtype=torch.float32)

    obs, _ = env.reset(seed=0)
    state = normalize(obs)
    episodes = 1
    steps_run = 0
    for step in range(TOTAL_STEPS):
        eps = EPS_END + max(0.0, (EPS_START - EPS_END) * (1 - step / EPS_DECAY_STEPS))
        if random.random() < eps:
            action = env.action_space.sample()
        else:
            with torch.no_grad():
                action = int(policy(state).argmax())
        next_obs, reward, terminated, truncated, _ = env.step(action)
        steps_run += 1
        next_state = normalize(next_obs)
        buffer.append((state, action, reward, next_state, terminated))
        state = next_state

        if terminated or truncated:
            obs, _ = env.reset(seed=episodes)
            state = normalize(obs)
            episodes += 1

        if len(buffer) >= MIN_REPLAY:
            batch = random.sample(buffer, BATCH_SIZE)
            states = torch.stack([b[0] for b in batch])
            actions = torch.as_tensor([b[1] for b in batch])
            rewards = torch.as_tensor([b[2] for b in batch], dtype=torch.float32)
            next_states = torch.stack([b[3] for b in batch])
            terms = torch.as_tensor([b[4] for b in batch], dtype=torch.float32)
            with torch.no_grad():
                targets = rewards + GAMMA * target(next_states).max(1).values * (1 - terms)
            q = policy(states).gather(1, actions[:, None]).squeeze(1)
            loss = nn.functional.smooth_l1_loss(q, targets)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            if step % TARGET_SYNC == 0:
                target.load_state_dict(policy.state_dict())

    env.close()
    ok = steps_run >= 1000
    print(f"ACCEPTANCE external-rl-loop: {'PASS' if ok else 'FAIL'}  "
          f"({steps_run} steps, {episodes} episodes, no protocol errors)")
    assert ok

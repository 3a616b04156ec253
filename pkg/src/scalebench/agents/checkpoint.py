"""Policy checkpoints.

Format (version 1): one JSON document with a hyperparameter header and a
flat tensor table; each tensor is little-endian float64 bytes encoded as
base64, so save/load round-trips parameters bit-for-bit.
"""
from __future__ import annotations

import base64
import dataclasses
import json

import numpy as np

from .baselines import RandomAgent, ThresholdAgent
from .dqn import DqnAgent, DqnHyperparams
from .ppo import PpoAgent, PpoHyperparams

FORMAT_VERSION = 1


def _encode_tensor(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(data.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_tensor(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()


def _named_tensors(agent) -> dict[str, np.ndarray]:
    if isinstance(agent, DqnAgent):
        nets = {"q": agent.q_net}
    else:
        nets = {"trunk": agent.trunk, "policy": agent.policy_head, "value": agent.value_head}
    out = {}
    for name, net in nets.items():
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            out[f"{name}/{i}/w"] = w
            out[f"{name}/{i}/b"] = b
    return out


def save_policy(path, agent) -> None:
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "algorithm": agent.algorithm,
        "seed": agent.seed,
    }
    if isinstance(agent, (DqnAgent, PpoAgent)):
        doc["hyperparams"] = dataclasses.asdict(agent.hp)
        doc["tensors"] = {k: _encode_tensor(v) for k, v in _named_tensors(agent).items()}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_policy(path, normalizer=None, sla=None):
    """Rebuild an agent able to act (deterministically) from a checkpoint."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {doc.get('format_version')!r}")
    algorithm = doc["algorithm"]
    seed = doc["seed"]
    if algorithm == "random":
        return RandomAgent(seed)
    if algorithm == "threshold":
        if sla is None:
            raise ValueError("loading a threshold policy requires the SLA spec")
        return ThresholdAgent(sla, seed)
    if normalizer is None:
        raise ValueError(f"loading a {algorithm} policy requires a normalizer")
    hp_fields = dict(doc["hyperparams"])
    if algorithm == "dqn":
        hp_fields["hidden"] = tuple(hp_fields["hidden"])
        agent = DqnAgent(DqnHyperparams(**hp_fields), seed, normalizer)
        nets = {"q": agent.q_net}
        agent.target_net.copy_weights_from(agent.q_net)
    elif algorithm == "ppo":
        hp_fields["hidden"] = tuple(hp_fields["hidden"])
        agent = PpoAgent(PpoHyperparams(**hp_fields), seed, normalizer)
        nets = {"trunk": agent.trunk, "policy": agent.policy_head, "value": agent.value_head}
    else:
        raise ValueError(f"unknown algorithm {algorithm!r} in checkpoint")
    for name, net in nets.items():
        for i in range(len(net.weights)):
            net.weights[i][...] = _decode_tensor(doc["tensors"][f"{name}/{i}/w"])
            net.biases[i][...] = _decode_tensor(doc["tensors"][f"{name}/{i}/b"])
    if algorithm == "dqn":
        agent.target_net.copy_weights_from(agent.q_net)
    return agent

"""Tiny fully connected networks with hand-written backprop.

Everything is float64 numpy. Hidden activations are tanh (fixed so that
gradient checks against central finite differences are well-conditioned);
weights use Glorot-uniform initialization drawn from a caller-supplied
generator, biases start at zero.
"""
from __future__ import annotations

import numpy as np


class Mlp:
    """Feed-forward stack of linear layers with tanh between them.

    ``activate_final`` also applies tanh to the last layer's output, which
    is how the shared actor-critic trunk exposes its features.
    """

    def __init__(self, sizes, rng: np.random.Generator, activate_final: bool = False):
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output size")
        self.sizes = tuple(int(s) for s in sizes)
        self.activate_final = activate_final
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    def parameters(self) -> list[np.ndarray]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def forward(self, x: np.ndarray):
        """Returns (output, cache); x has shape (batch, in_dim)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        inputs = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if i < last or self.activate_final:
                h = np.tanh(h)
        return h, (inputs, h)

    def backward(self, cache, grad_out: np.ndarray):
        """Returns (grads aligned with parameters(), grad wrt the input)."""
        inputs, out = cache
        grads: list[np.ndarray] = []
        g = np.asarray(grad_out, dtype=np.float64)
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i < last or self.activate_final:
                # recompute this layer's activated output from the next input
                layer_out = inputs[i + 1] if i < last else out
                g = g * (1.0 - layer_out ** 2)
            grads.insert(0, g.sum(axis=0))              # bias
            grads.insert(0, inputs[i].T @ g)            # weight
            g = g @ self.weights[i].T
        return grads, g

    def copy_weights_from(self, other: "Mlp") -> None:
        for mine, theirs in zip(self.parameters(), other.parameters()):
            mine[...] = theirs

    def clone(self) -> "Mlp":
        twin = Mlp.__new__(Mlp)
        twin.sizes = self.sizes
        twin.activate_final = self.activate_final
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin


class Adam:
    """Adam with the usual moment defaults (0.9, 0.999, eps 1e-8)."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def seed_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Deterministic child generators for one agent seed (init, action, ...)."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]

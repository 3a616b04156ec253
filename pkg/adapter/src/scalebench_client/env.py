"""Remote scaling environment: the bridge protocol behind the standard
reset/step environment API.

The client is pure transport plus validation: no simulation, no learning,
one blocking request in flight at a time.  Observations come back as
float64 vectors whose components equal the server's values bit-for-bit
(the wire carries 17 significant digits).
"""
from __future__ import annotations

import json
import socket
from dataclasses import dataclass, field

import numpy as np


class TransportError(ConnectionError):
    """The connection died or the server closed it mid-session."""


class ProtocolError(RuntimeError):
    """The server rejected a request; carries the server's error code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class BoxSpace:
    """Continuous observation bounds, gym-style."""

    low: np.ndarray
    high: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.low.shape

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=np.float64)
        return arr.shape == self.low.shape and bool(
            np.all(arr >= self.low) and np.all(arr <= self.high)
        )


@dataclass
class DiscreteSpace:
    """Categorical action space with a seeded ``sample()``."""

    n: int
    _rng: np.random.Generator = field(
        default_factory=lambda: np.random.default_rng(0), repr=False
    )

    def seed(self, seed: int) -> None:
        self._rng = np.random.default_rng(seed)

    def sample(self) -> int:
        return int(self._rng.integers(0, self.n))

    def contains(self, x) -> bool:
        return isinstance(x, (int, np.integer)) and not isinstance(x, bool) \
            and 0 <= int(x) < self.n


def _parse_address(address) -> tuple[str, int]:
    if isinstance(address, (tuple, list)) and len(address) == 2:
        return str(address[0]), int(address[1])
    host, sep, port = str(address).rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be host:port, got {address!r}")
    return host, int(port)


class RemoteScalingEnv:
    """Standard reset/step environment over a scalebench bridge session.

    Not shareable across threads: the protocol allows one in-flight
    request per session.  The handle is unusable after ``close()``.
    """

    metadata = {"render_modes": []}

    def __init__(self, address, split: str = "train", timeout: float = 30.0):
        if split not in ("train", "eval"):
            raise ValueError(f'split must be "train" or "eval", got {split!r}')
        self.split = split
        host, port = _parse_address(address)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._file = self._sock.makefile("rwb")
        self._closed = False
        meta = self._request({"cmd": "handshake"})
        self.protocol_version = meta["protocol_version"]
        obs_meta = meta["observation"]
        self.observation_space = BoxSpace(
            low=np.asarray(obs_meta["low"], dtype=np.float64),
            high=np.asarray(obs_meta["high"], dtype=np.float64),
        )
        self.action_space = DiscreteSpace(n=meta["actions"]["n"])
        self.action_deltas = tuple(meta["actions"]["deltas"])
        self.max_steps = meta["max_steps"]
        self.reward_name = meta["reward"]

    # -- plumbing ---------------------------------------------------------

    def _request(self, payload: dict) -> dict:
        if self._closed:
            raise TransportError("handle is closed")
        try:
            self._file.write((json.dumps(payload) + "\n").encode("utf-8"))
            self._file.flush()
            raw = self._file.readline()
        except OSError as exc:
            raise TransportError(f"connection lost: {exc}") from exc
        if not raw:
            raise TransportError("server closed the connection")
        reply = json.loads(raw.decode("utf-8"))
        if "error" in reply:
            err = reply["error"]
            raise ProtocolError(err.get("code", "unknown"), err.get("message", ""))
        return reply

    @staticmethod
    def _decode_obs(values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64)

    # -- environment API ----------------------------------------------------

    def reset(self, seed: int | None = None, options: dict | None = None):
        """Start a fresh episode; returns (observation, info)."""
        reply = self._request(
            {"cmd": "reset", "seed": 0 if seed is None else int(seed), "split": self.split}
        )
        return self._decode_obs(reply["obs"]), dict(reply.get("info", {}))

    def step(self, action):
        """Returns (observation, reward, terminated, truncated, info)."""
        if not self.action_space.contains(action):
            raise ValueError(
                f"action must be an integer in [0, {self.action_space.n}), got {action!r}"
            )
        reply = self._request({"cmd": "step", "action": int(action)})
        return (
            self._decode_obs(reply["obs"]),
            float(reply["reward"]),
            bool(reply["terminated"]),
            bool(reply["truncated"]),
            dict(reply.get("info", {})),
        )

    def close(self) -> None:
        if self._closed:
            return
        try:
            self._request({"cmd": "close"})
        except (TransportError, ProtocolError):
            pass
        finally:
            self._closed = True
            try:
                self._file.close()
                self._sock.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

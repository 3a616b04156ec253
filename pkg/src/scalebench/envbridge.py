"""TCP bridge exposing the environment to out-of-process agents.

Wire protocol (version 1): newline-delimited UTF-8 JSON, one request per
line, one response line each, no pipelining.  Requests:

    {"cmd": "handshake"}
    {"cmd": "reset", "seed": <u64>, "split": "train" | "eval"}
    {"cmd": "step", "action": 0 | 1 | 2}
    {"cmd": "close"}

A step response carries {"obs": [v, c, d], "reward": r, "terminated": b,
"truncated": b, "info": {...}}.  Floats are serialized with 17 significant
digits so every numeric field round-trips bit-for-bit.  Each connection is
an isolated session with its own environment; a "train" reset samples the
episode start slot from the seed, an "eval" reset always starts at the
beginning of the evaluation split.  Errors come back as
{"error": {"code": ..., "message": ...}} and leave the session usable.
"""
from __future__ import annotations

import json
import socketserver
import threading

from .envmdp import ScalingEnv, encode_action, sample_start_slot
from .expconfig import ExperimentConfig
from .workload import generate, split

PROTOCOL_VERSION = 1


def json_dumps(obj) -> str:
    """JSON with floats at 17 significant digits (round-trip exact)."""
    parts: list[str] = []
    _write_json(obj, parts)
    return "".join(parts)


def _write_json(obj, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _write_json(item, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                parts.append(",")
            parts.append(json.dumps(str(key)))
            parts.append(":")
            _write_json(value, parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def _error(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def _obs_payload(obs) -> list[float]:
    return [float(obs.v), float(obs.c_bar), float(obs.d)]


def _info_payload(info: dict) -> dict:
    return {
        "slot": int(info["slot"]),
        "arrivals": int(info["arrivals"]),
        "completed_jobs": int(info["completed_jobs"]),
        "queue_len": int(info["queue_len"]),
        "cap_violation": bool(info["cap_violation"]),
        "latency_violation": bool(info["latency_violation"]),
    }


class _Session:
    """One connection's environment state and request dispatch."""

    def __init__(self, server: "BridgeServer"):
        self.server = server
        self.env: ScalingEnv | None = None
        self.closing = False

    def handle(self, line: str) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error("malformed", f"invalid JSON: {exc}")
        if not isinstance(request, dict) or "cmd" not in request:
            return _error("malformed", 'requests must be objects with a "cmd" field')
        cmd = request["cmd"]
        if cmd == "handshake":
            return self._handshake()
        if cmd == "reset":
            return self._reset(request)
        if cmd == "step":
            return self._step(request)
        if cmd == "close":
            self.closing = True
            return {"ok": True}
        return _error("protocol", f"unknown command {cmd!r}")

    def _handshake(self) -> dict:
        config = self.server.config
        return {
            "protocol_version": PROTOCOL_VERSION,
            "observation": {
                "dim": 3,
                "names": ["replicas", "cpu_percent", "latency_seconds"],
                "low": [float(config.sim.min_replicas), 0.0, 0.0],
                "high": [float(config.sim.max_replicas_cap), 100.0,
                         float(config.sla.d_terminate)],
            },
            "actions": {"n": 3, "deltas": [-1, 0, 1]},
            "max_steps": config.episode.max_steps,
            "reward": self.server.reward_name,
        }

    def _reset(self, request: dict) -> dict:
        seed = request.get("seed", 0)
        split_name = request.get("split", "train")
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            return _error("argument", "seed must be a non-negative integer")
        if split_name not in ("train", "eval"):
            return _error("argument", 'split must be "train" or "eval"')
        trace = self.server.train_trace if split_name == "train" else self.server.eval_trace
        env = ScalingEnv(trace, self.server.reward_spec, self.server.config.sim,
                         self.server.config.episode)
        if split_name == "train":
            start = sample_start_slot(seed, len(trace), env.episode.max_steps)
        else:
            start = 0
        obs = env.reset(start)
        self.env = env
        return {"obs": _obs_payload(obs), "info": {"split": split_name, "start_slot": start}}

    def _step(self, request: dict) -> dict:
        if self.env is None:
            return _error("state", "step before reset")
        if not self.env.active:
            return _error("state", "episode is over; reset the session")
        action = request.get("action")
        if not isinstance(action, int) or isinstance(action, bool) or action not in (0, 1, 2):
            return _error("argument", "action must be 0, 1 or 2")
        outcome = self.env.step(encode_action(action))
        return {
            "obs": _obs_payload(outcome.observation),
            "reward": float(outcome.reward),
            "terminated": outcome.terminated,
            "truncated": outcome.truncated,
            "info": _info_payload(outcome.info),
        }


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = _Session(self.server.bridge)
        while True:
            try:
                raw = self.rfile.readline()
            except (ConnectionError, OSError):
                break
            if not raw:
                break
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = session.handle(line)
            try:
                self.wfile.write((json_dumps(response) + "\n").encode("utf-8"))
            except (ConnectionError, OSError):
                break
            if session.closing:
                break


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class BridgeServer:
    """Serves isolated environment sessions over local TCP.

    The workload trace is generated once from the experiment config; all
    sessions share it read-only.  The served reward function is the first
    one listed in the config.
    """

    def __init__(self, config: ExperimentConfig, host: str = "127.0.0.1", port: int = 0):
        config.validate()
        self.config = config
        trace = generate(config.workload)
        self.train_trace, self.eval_trace = split(trace, config.train_len)
        self.reward_spec = config.reward_specs[0]
        self.reward_name = self.reward_spec.name
        self._server = _TcpServer((host, port), _Handler)
        self._server.bridge = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

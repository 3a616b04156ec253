"""Seeded generation of the job-arrival trace.

The trace combines a diurnal long-term pattern (low at night, peaking
mid-period), a weekday/weekend modulation, gaussian short-term noise and
sparse bursts:

    arrivals(t) = round(max(0, base
                            + (peak - base) * 0.5 * (1 - cos(2*pi*t/P)) * wf(t)
                            + N(0, noise_std) + burst(t)))

where P is ``diurnal_period``, ``wf(t)`` is 1.0 on days 0-4 and 0.7 on days
5-6 of each 7-day cycle (one day = one diurnal period), and ``burst(t)``
adds ``burst_magnitude`` with probability ``burst_rate``.

Randomness comes from numpy's PCG64 generator seeded with ``seed``; per
trace one block of normals is drawn first, then one block of uniforms for
the bursts.  Rounding is numpy's round-half-to-even.  The same config
therefore always yields a bit-identical trace.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_HORIZON = 604800       # 7 days at 1 s/slot
DEFAULT_TRAIN_LEN = 432000     # first 5 days
DEFAULT_EVAL_LEN = 172800      # last 2 days

CSV_HEADER = ("slot", "arrivals")


@dataclass(frozen=True)
class WorkloadConfig:
    horizon_slots: int = DEFAULT_HORIZON
    base_level: float = 16.0
    peak_level: float = 30.0
    diurnal_period: int = 86400
    noise_std: float = 1.0
    burst_rate: float = 0.005
    burst_magnitude: float = 4.0
    seed: int = 7

    def validate(self) -> None:
        if self.horizon_slots <= 0:
            raise ConfigError(f"horizon_slots must be positive, got {self.horizon_slots}")
        if self.diurnal_period <= 0:
            raise ConfigError(f"diurnal_period must be positive, got {self.diurnal_period}")
        if self.base_level < 0:
            raise ConfigError(f"base_level must be >= 0, got {self.base_level}")
        if self.peak_level < self.base_level:
            raise ConfigError(
                f"peak_level ({self.peak_level}) must be >= base_level ({self.base_level})"
            )
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if not 0.0 <= self.burst_rate <= 1.0:
            raise ConfigError(f"burst_rate must be in [0,1], got {self.burst_rate}")


@dataclass(frozen=True, eq=False)
class WorkloadTrace:
    """Immutable per-slot arrival counts."""

    arrivals: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.arrivals, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("trace must be one-dimensional")
        if len(arr) == 0:
            raise ValueError("trace must not be empty")
        if (arr < 0).any():
            raise ValueError("arrival counts must be non-negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "arrivals", arr)

    def __len__(self) -> int:
        return len(self.arrivals)

    def __getitem__(self, slot: int) -> int:
        return int(self.arrivals[slot])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for slot, count in enumerate(self.arrivals):
                writer.writerow((slot, int(count)))

    @classmethod
    def from_csv(cls, path) -> "WorkloadTrace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != CSV_HEADER:
                raise ValueError(f"expected header {CSV_HEADER}, got {header}")
            values = [int(row[1]) for row in reader if row]
        return cls(np.asarray(values, dtype=np.int64))


def generate(config: WorkloadConfig) -> WorkloadTrace:
    """Generate the arrival trace for ``config`` (pure function of the config)."""
    config.validate()
    n = config.horizon_slots
    rng = np.random.Generator(np.random.PCG64(config.seed))

    t = np.arange(n, dtype=np.float64)
    diurnal = 0.5 * (1.0 - np.cos(2.0 * np.pi * t / config.diurnal_period))
    day_index = (np.arange(n) // config.diurnal_period) % 7
    weekday_factor = np.where(day_index < 5, 1.0, 0.7)

    level = config.base_level + (config.peak_level - config.base_level) * diurnal * weekday_factor
    noise = rng.normal(0.0, config.noise_std, n)
    bursts = (rng.random(n) < config.burst_rate) * float(config.burst_magnitude)

    raw = np.maximum(level + noise + bursts, 0.0)
    return WorkloadTrace(np.rint(raw).astype(np.int64))


def split(trace: WorkloadTrace, train_len: int) -> tuple[WorkloadTrace, WorkloadTrace]:
    """Split a trace into a training part of exactly ``train_len`` slots and the rest."""
    if not 0 < train_len < len(trace):
        raise ValueError(
            f"train_len must be in (0, {len(trace)}), got {train_len}"
        )
    return (
        WorkloadTrace(trace.arrivals[:train_len]),
        WorkloadTrace(trace.arrivals[train_len:]),
    )

"""The three reward functions, their analytic ranges, and min-max scaling.

All three leave the episode-termination penalty to the environment; they
only price regular transitions:

* ``rfn1`` - in-band indicator: 1 when latency or mean CPU sits inside its
  tolerance band around the target, else 0.
* ``rfn2`` - transition rewards over a two-state latency process
  (Above/Below the target): +1 for the two transitions considered good,
  0 for everything else.
* ``rfn3`` - negative weighted cost of SLA violation and replica churn,
  parameterized by an optimization profile (w_perf, w_res).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class SlaSpec:
    """Latency/CPU targets with a shared tolerance fraction.

    ``d_terminate`` is the inadmissible-latency bound that ends an episode;
    it defaults to five times the tolerated latency (1+epsilon)*d_tgt and
    must stay strictly above it so that the rfn3 violation band and the
    termination bound remain distinct mechanisms.
    """

    d_tgt: float = 0.020
    c_tgt: float = 75.0
    epsilon: float = 0.20
    d_terminate: float | None = None

    def __post_init__(self):
        if self.d_terminate is None:
            object.__setattr__(self, "d_terminate", 5.0 * (1.0 + self.epsilon) * self.d_tgt)

    def validate(self) -> None:
        if self.d_tgt <= 0:
            raise ConfigError(f"d_tgt must be positive, got {self.d_tgt}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in (0,1), got {self.epsilon}")
        if self.c_tgt <= 0 or self.c_tgt > 100:
            raise ConfigError(f"c_tgt must be in (0,100], got {self.c_tgt}")
        if self.d_terminate <= (1.0 + self.epsilon) * self.d_tgt:
            raise ConfigError(
                "d_terminate must exceed the tolerated latency "
                f"(1+epsilon)*d_tgt = {(1.0 + self.epsilon) * self.d_tgt}"
            )


@dataclass(frozen=True)
class OptimizationProfile:
    w_perf: float
    w_res: float

    def validate(self) -> None:
        if not (0.0 <= self.w_perf <= 1.0 and 0.0 <= self.w_res <= 1.0):
            raise ConfigError("profile weights must lie in [0,1]")
        if abs(self.w_perf + self.w_res - 1.0) > 1e-9:
            raise ConfigError(
                f"profile weights must sum to 1, got {self.w_perf} + {self.w_res}"
            )


#: The three stock profiles: balanced, resource-saving, performance-first.
PROFILES = {
    1: OptimizationProfile(0.5, 0.5),
    2: OptimizationProfile(0.01, 0.99),
    3: OptimizationProfile(0.99, 0.01),
}


class MrpState(enum.Enum):
    ABOVE = "above"
    BELOW = "below"


def mrp_state(d: float, sla: SlaSpec) -> MrpState:
    """Latency bucket for rfn2; the boundary d == d_tgt counts as BELOW."""
    return MrpState.ABOVE if d > sla.d_tgt else MrpState.BELOW


@dataclass(frozen=True)
class RewardSpec:
    kind: str  # "rfn1" | "rfn2" | "rfn3"
    profile: OptimizationProfile | None = None
    sla: SlaSpec = SlaSpec()

    def validate(self) -> None:
        if self.kind not in ("rfn1", "rfn2", "rfn3"):
            raise ConfigError(f"unknown reward kind {self.kind!r}")
        if (self.kind == "rfn3") != (self.profile is not None):
            raise ConfigError("an optimization profile is required iff kind is rfn3")
        if self.profile is not None:
            self.profile.validate()
        self.sla.validate()

    @property
    def name(self) -> str:
        if self.kind != "rfn3":
            return self.kind
        for idx, profile in PROFILES.items():
            if profile == self.profile:
                return f"rfn3_{idx}"
        return f"rfn3_{self.profile.w_perf:g}_{self.profile.w_res:g}"


@dataclass(frozen=True)
class RewardRange:
    min_per_episode: float
    max_per_episode: float


def rfn1(d: float, c_bar: float, sla: SlaSpec) -> int:
    """1 if latency OR mean CPU is inside its tolerance band, else 0."""
    in_latency_band = abs(d - sla.d_tgt) < sla.epsilon * sla.d_tgt
    in_cpu_band = abs(c_bar - sla.c_tgt) < sla.epsilon * sla.c_tgt
    return 1 if (in_latency_band or in_cpu_band) else 0


def rfn2(prev: MrpState, action: int, next_state: MrpState) -> int:
    """+1 for (Above, add, Below) and (Below, remove, Below); 0 otherwise."""
    if prev is MrpState.ABOVE and action == 1 and next_state is MrpState.BELOW:
        return 1
    if prev is MrpState.BELOW and action == -1 and next_state is MrpState.BELOW:
        return 1
    return 0


def rfn3(d: float, action: int, profile: OptimizationProfile, sla: SlaSpec) -> float:
    """Negative weighted cost of an SLA violation plus replica churn.

    The resource indicator prices the commanded action (+1 add, 0 maintain,
    -1 remove) even when the pool clamps it, so removing at the floor still
    earns the w_res credit; this is what makes resource-heavy profiles
    degenerate, as intended.
    """
    perf_indicator = 1 if d > (1.0 + sla.epsilon) * sla.d_tgt else 0
    res_indicator = action  # -1 remove, 0 maintain, +1 add
    return -(profile.w_perf * perf_indicator + profile.w_res * res_indicator)


def reward_range(spec: RewardSpec, episode_len: int) -> RewardRange:
    """Analytic per-step extrema times the episode length.

    The extrema ignore feasibility (e.g. removing a replica on every step),
    matching the published min/max table.
    """
    if episode_len < 1:
        raise ValueError(f"episode_len must be >= 1, got {episode_len}")
    spec.validate()
    if spec.kind in ("rfn1", "rfn2"):
        return RewardRange(0.0, float(episode_len))
    # rfn3: worst step pays both costs (-1); best step earns w_res by removing
    # without a violation.
    return RewardRange(-float(episode_len), spec.profile.w_res * episode_len)


def normalize_return(raw: float, spec: RewardSpec, episode_len: int) -> float:
    """Min-max scale an accumulated episode reward into [0, 1].

    Deliberately unclamped: values outside [0, 1] signal that the raw
    return violated the analytic range (e.g. a termination penalty).
    """
    rng = reward_range(spec, episode_len)
    span = rng.max_per_episode - rng.min_per_episode
    if span <= 0:
        raise ConfigError(f"degenerate reward range {rng} for {spec.name}")
    return (raw - rng.min_per_episode) / span


def step_reward(
    spec: RewardSpec,
    prev_d: float,
    action: int,
    d: float,
    c_bar: float,
) -> float:
    """Reward for one regular (non-terminating) transition."""
    if spec.kind == "rfn1":
        return float(rfn1(d, c_bar, spec.sla))
    if spec.kind == "rfn2":
        return float(rfn2(mrp_state(prev_d, spec.sla), action, mrp_state(d, spec.sla)))
    return rfn3(d, action, spec.profile, spec.sla)

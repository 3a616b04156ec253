"""Training, validation, scoring and selection of scaling agents.

An *agent* is an algorithm x reward-function x seed combination.  Each
epoch trains it for N episodes (random start slots on the training split),
freezes the policy and evaluates it for V deterministic episodes at
sequential start slots on the evaluation split; the epoch performance is
the mean min-max-normalized return over those V episodes.  Agents are
also evaluated once before any training (epoch 0).

After the last epoch, one long validation episode over the full
evaluation split yields the learning score (normalized accumulated reward
over normalized episode length - a value above 1 flags early termination)
and the networking score (cohort-normalized mean replica count combined
with own-max-normalized mean latency).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .agents.baselines import RandomAgent, ThresholdAgent
from .agents.dqn import DqnAgent, DqnHyperparams
from .agents.nets import seed_streams
from .agents.ppo import PpoAgent, PpoHyperparams, RolloutCollector
from .envmdp import (
    EpisodeConfig,
    Observation,
    ScalingEnv,
    encode_action,
    normalize_observation,
)
from .rewards import RewardSpec, normalize_return
from .simcore import SimParams
from .stats import WelchResult, welch_t_test
from .workload import WorkloadTrace

LEARNING_ALGORITHMS = ("dqn", "ppo")


@dataclass(frozen=True)
class TrainingSchedule:
    train_episodes: int = 24   # N
    eval_episodes: int = 12    # V
    epochs: int = 10           # E
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)

    def validate(self) -> None:
        if min(self.train_episodes, self.eval_episodes, self.epochs) < 1:
            raise ValueError("train_episodes, eval_episodes and epochs must all be >= 1")
        if len(self.seeds) < 1:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_return: float
    episodes_terminated: int


@dataclass
class ValidationResult:
    acc_reward: float
    episode_length: int
    terminated: bool
    v_stats: dict[str, float]
    d_stats: dict[str, float]
    trajectory: list[tuple[int, int, float, float, float]]  # (step, v, c_bar, d, reward)


@dataclass
class AgentRun:
    algorithm: str
    rfn: str
    seed: int
    curve: list[EpochRecord] = field(default_factory=list)
    validation: ValidationResult | None = None

    @property
    def agent_id(self) -> str:
        return f"{self.algorithm}_{self.rfn}_s{self.seed}"


@dataclass
class ScoreReport:
    agent_id: str
    algorithm: str
    rfn: str
    seed: int
    learning_score: float
    networking_score: float | None
    discarded: bool
    reason: str = ""


@dataclass(frozen=True)
class Verdict:
    rfn: str
    action: str  # "deploy" | "refine"
    agent_id: str | None
    reason: str


# ---------------------------------------------------------------------------
# agent construction and episode driving

def build_agent(algorithm: str, seed: int, params: SimParams, spec: RewardSpec,
                dqn_hp: DqnHyperparams | None = None,
                ppo_hp: PpoHyperparams | None = None):
    def normalizer(obs: Observation):
        return normalize_observation(obs, params, spec.sla)

    if algorithm == "dqn":
        return DqnAgent(dqn_hp or DqnHyperparams(), seed, normalizer)
    if algorithm == "ppo":
        return PpoAgent(ppo_hp or PpoHyperparams(), seed, normalizer)
    if algorithm == "random":
        return RandomAgent(seed)
    if algorithm == "threshold":
        return ThresholdAgent(spec.sla, seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_episode(agent, env: ScalingEnv, start_slot: int, deterministic: bool,
                record=None) -> tuple[float, int, bool]:
    """Run one full episode; returns (accumulated reward, steps, terminated)."""
    obs = env.reset(start_slot)
    acc = 0.0
    terminated = False
    while env.active:
        action = agent.select_action(obs, deterministic=deterministic)
        outcome = env.step(encode_action(action))
        acc += outcome.reward
        obs = outcome.observation
        terminated = outcome.terminated
        if record is not None:
            record.append((env.steps_taken, obs.v, obs.c_bar, obs.d, outcome.reward))
    return acc, env.steps_taken, terminated


def _train_episode_dqn(agent: DqnAgent, env: ScalingEnv, start_slot: int) -> None:
    obs = env.reset(start_slot)
    obs_vec = agent.normalizer(obs)
    while env.active:
        action = agent.act(obs_vec, agent.current_epsilon())
        outcome = env.step(encode_action(action))
        next_vec = agent.normalizer(outcome.observation)
        agent.observe(obs_vec, action, outcome.reward, next_vec, outcome.terminated)
        obs_vec = next_vec


def _sample_start(rng: np.random.Generator, trace_len: int, max_steps: int) -> int:
    return int(rng.integers(0, trace_len - max_steps + 1))


def evaluate_agent(agent, eval_env: ScalingEnv, episodes: int,
                   spec: RewardSpec) -> tuple[float, int]:
    """V frozen-policy episodes at sequential start slots; returns
    (mean normalized return, number of terminated episodes)."""
    max_steps = eval_env.episode.max_steps
    returns = []
    n_terminated = 0
    for i in range(episodes):
        acc, _, terminated = run_episode(agent, eval_env, i * max_steps, deterministic=True)
        returns.append(normalize_return(acc, spec, max_steps))
        n_terminated += int(terminated)
    return float(np.mean(returns)), n_terminated


def run_epoch(agent, train_env: ScalingEnv, eval_env: ScalingEnv,
              schedule: TrainingSchedule, spec: RewardSpec, epoch: int,
              start_rng: np.random.Generator) -> EpochRecord:
    """N training episodes with learning updates, then the frozen-policy
    evaluation.  Baseline agents skip the training half (nothing to learn)."""
    max_steps = train_env.episode.max_steps
    trace_len = len(train_env.trace)
    if isinstance(agent, DqnAgent):
        for _ in range(schedule.train_episodes):
            _train_episode_dqn(agent, train_env, _sample_start(start_rng, trace_len, max_steps))
    elif isinstance(agent, PpoAgent):
        collector = RolloutCollector(
            agent, train_env,
            lambda env: env.reset(_sample_start(start_rng, trace_len, max_steps)),
        )
        budget = schedule.train_episodes
        while budget > 0:
            rollout = collector.collect(agent.hp.rollout_length, episode_budget=budget)
            agent.update(rollout)
            budget -= rollout.episodes
    mean_return, n_terminated = evaluate_agent(agent, eval_env, schedule.eval_episodes, spec)
    return EpochRecord(epoch, mean_return, n_terminated)


def train_run(algorithm: str, spec: RewardSpec, seed: int,
              train_trace: WorkloadTrace, eval_trace: WorkloadTrace,
              params: SimParams, episode: EpisodeConfig, schedule: TrainingSchedule,
              dqn_hp: DqnHyperparams | None = None,
              ppo_hp: PpoHyperparams | None = None) -> tuple[AgentRun, object]:
    """Full E-epoch training of one agent, including the epoch-0 evaluation."""
    schedule.validate()
    if schedule.eval_episodes * episode.max_steps > len(eval_trace):
        raise ValueError(
            f"{schedule.eval_episodes} sequential evaluation episodes of "
            f"{episode.max_steps} steps do not fit the {len(eval_trace)}-slot split"
        )
    agent = build_agent(algorithm, seed, params, spec, dqn_hp, ppo_hp)
    train_env = ScalingEnv(train_trace, spec, params, episode)
    eval_env = ScalingEnv(eval_trace, spec, params, episode)
    start_rng = seed_streams(seed, 4)[3]  # independent of the agent's streams

    run = AgentRun(algorithm=algorithm, rfn=spec.name, seed=seed)
    mean0, term0 = evaluate_agent(agent, eval_env, schedule.eval_episodes, spec)
    run.curve.append(EpochRecord(0, mean0, term0))
    for epoch in range(1, schedule.epochs + 1):
        run.curve.append(
            run_epoch(agent, train_env, eval_env, schedule, spec, epoch, start_rng)
        )
    return run, agent


# ---------------------------------------------------------------------------
# validation and scoring

def _series_stats(values) -> dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) == 0:
        return {k: 0.0 for k in ("mean", "std", "min", "p25", "p50", "p75", "max")}
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
        "min": float(arr.min()),
        "p25": float(np.percentile(arr, 25)),
        "p50": float(np.percentile(arr, 50)),
        "p75": float(np.percentile(arr, 75)),
        "max": float(arr.max()),
    }


def validate_run(agent, eval_trace: WorkloadTrace, spec: RewardSpec,
                 params: SimParams) -> ValidationResult:
    """One deterministic validation episode over the whole evaluation split."""
    full_len = len(eval_trace)
    env = ScalingEnv(eval_trace, spec, params, EpisodeConfig(max_steps=full_len))
    rows: list[tuple[int, int, float, float, float]] = []
    acc, steps, terminated = run_episode(agent, env, 0, deterministic=True, record=rows)
    return ValidationResult(
        acc_reward=acc,
        episode_length=steps,
        terminated=terminated,
        v_stats=_series_stats([r[1] for r in rows]),
        d_stats=_series_stats([r[3] for r in rows]),
        trajectory=rows,
    )


def learning_score(validation: ValidationResult, spec: RewardSpec, full_len: int) -> float:
    """Normalized accumulated reward over normalized episode length.

    Normalization always uses the full-validation-length reward range:
    surviving the whole episode caps the score at one, so a score above
    one flags early termination.
    """
    if validation.episode_length == 0:
        return math.inf
    normalized_reward = normalize_return(validation.acc_reward, spec, full_len)
    normalized_length = validation.episode_length / full_len
    return normalized_reward / normalized_length


def networking_scores(cohort: list[tuple[str, float, float, float]],
                      w_v: float = 0.5, w_d: float = 0.5) -> dict[str, float]:
    """Scores for a cohort of (agent_id, mean replicas, mean latency, own max
    latency).

    The replica term is inverse min-max normalized across the cohort (the
    fewest replicas scores 1); a single-agent cohort degenerates to 1.
    The latency term is the agent's own mean/max ratio (1 when constant).
    """
    if not cohort:
        return {}
    v_means = [entry[1] for entry in cohort]
    v_min, v_max = min(v_means), max(v_means)
    span = v_max - v_min
    scores = {}
    for agent_id, v_mean, d_mean, d_max in cohort:
        v_prime = 1.0 if span == 0 else 1.0 - (v_mean - v_min) / span
        d_prime = 1.0 if d_max == 0 else d_mean / d_max
        scores[agent_id] = w_v * v_prime + w_d * d_prime
    return scores


def score_runs(runs: list[AgentRun], specs: dict[str, RewardSpec], full_len: int,
               w_v: float = 0.5, w_d: float = 0.5, tol: float = 0.01) -> list[ScoreReport]:
    """Learning scores for every validated run, then networking scores over
    the cohort of non-discarded agents."""
    reports: list[ScoreReport] = []
    for run in runs:
        if run.validation is None:
            continue
        score = learning_score(run.validation, specs[run.rfn], full_len)
        discarded = score > 1.0 + tol
        reports.append(ScoreReport(
            agent_id=run.agent_id,
            algorithm=run.algorithm,
            rfn=run.rfn,
            seed=run.seed,
            learning_score=score,
            networking_score=None,
            discarded=discarded,
            reason="validation episode terminated early" if discarded else "",
        ))
    by_id = {run.agent_id: run for run in runs}
    cohort = [
        (r.agent_id,
         by_id[r.agent_id].validation.v_stats["mean"],
         by_id[r.agent_id].validation.d_stats["mean"],
         by_id[r.agent_id].validation.d_stats["max"])
        for r in reports if not r.discarded
    ]
    net = networking_scores(cohort, w_v, w_d)
    for report in reports:
        if report.agent_id in net:
            report.networking_score = net[report.agent_id]
    return reports


# ---------------------------------------------------------------------------
# learning curves and selection

@dataclass
class CurveSummary:
    epochs: list[int]
    mean: dict[str, list[float]]
    p10: dict[str, list[float]]
    p90: dict[str, list[float]]
    significant: list[bool]
    welch: list[WelchResult | None]


def summarize_curves(curves: dict[tuple[str, int], list[float]],
                     alpha: float = 0.05) -> CurveSummary:
    """Per-epoch mean and 10th-90th percentile band per algorithm, plus a
    Welch significance flag per epoch when exactly two algorithms with at
    least two seeds each are present."""
    lengths = {len(c) for c in curves.values()}
    if len(lengths) != 1:
        raise ValueError(f"all curves must have the same epoch count, got {sorted(lengths)}")
    n_epochs = lengths.pop()
    algorithms = sorted({algo for algo, _ in curves})
    samples = {
        algo: np.array([c for (a, _), c in sorted(curves.items()) if a == algo])
        for algo in algorithms
    }
    mean = {a: list(map(float, s.mean(axis=0))) for a, s in samples.items()}
    p10 = {a: list(map(float, np.percentile(s, 10, axis=0))) for a, s in samples.items()}
    p90 = {a: list(map(float, np.percentile(s, 90, axis=0))) for a, s in samples.items()}
    significant = [False] * n_epochs
    welch: list[WelchResult | None] = [None] * n_epochs
    # significance marks compare the two learning algorithms; baselines are
    # plotted but never tested
    testable = [a for a in algorithms
                if a in LEARNING_ALGORITHMS and len(samples[a]) >= 2]
    if len(testable) == 2:
        a, b = testable
        for e in range(n_epochs):
            res = welch_t_test(samples[a][:, e], samples[b][:, e], alpha)
            welch[e] = res
            significant[e] = res.significant
    return CurveSummary(list(range(n_epochs)), mean, p10, p90, significant, welch)


def _plateau(curve: list[float], window: int = 3) -> float:
    tail = curve[-window:] if len(curve) >= window else curve
    return float(np.mean(tail))


def select(reports: list[ScoreReport], curves: dict[str, list[float]],
           alpha: float = 0.05, tol_plateau: float = 0.05,
           top_frac: float = 0.4) -> dict[str, Verdict]:
    """The selection filter, per reward function.

    Drops agents already discarded at validation or whose learning score
    strays from their training plateau by more than ``tol_plateau``; picks
    the best networking score among the survivors; issues "deploy" when
    that pick ranks in the top ``top_frac`` of its RFn's learning scores or
    when the Welch test on final-epoch performances proves its algorithm
    superior, else "refine".  Ties break on higher learning score, then
    lower seed.
    """
    verdicts: dict[str, Verdict] = {}
    for rfn in sorted({r.rfn for r in reports}):
        rfn_reports = [r for r in reports if r.rfn == rfn]
        survivors = []
        for report in rfn_reports:
            if report.discarded:
                continue
            curve = curves.get(report.agent_id)
            if curve is None:
                continue
            if abs(report.learning_score - _plateau(curve)) > tol_plateau:
                continue
            survivors.append(report)
        if not survivors:
            verdicts[rfn] = Verdict(rfn, "refine", None,
                                    "no agent survived the learning-score filter")
            continue
        pick = max(
            survivors,
            key=lambda r: (
                -math.inf if r.networking_score is None else r.networking_score,
                r.learning_score,
                -r.seed,
            ),
        )
        ranked = sorted(survivors, key=lambda r: r.learning_score, reverse=True)
        rank = ranked.index(pick)
        top_k = max(1, math.ceil(top_frac * len(survivors)))
        criterion_rank = rank < top_k

        criterion_welch = False
        finals: dict[str, list[float]] = {}
        for report in rfn_reports:
            curve = curves.get(report.agent_id)
            if curve and report.algorithm in LEARNING_ALGORITHMS:
                finals.setdefault(report.algorithm, []).append(curve[-1])
        if len(finals) == 2 and all(len(v) >= 2 for v in finals.values()):
            (algo_a, vals_a), (algo_b, vals_b) = sorted(finals.items())
            result = welch_t_test(vals_a, vals_b, alpha)
            if result.significant:
                better = algo_a if np.mean(vals_a) > np.mean(vals_b) else algo_b
                criterion_welch = pick.algorithm == better

        if criterion_rank or criterion_welch:
            why = []
            if criterion_rank:
                why.append(f"learning score ranks {rank + 1}/{len(survivors)}")
            if criterion_welch:
                why.append(f"{pick.algorithm} significantly superior (alpha={alpha})")
            verdicts[rfn] = Verdict(rfn, "deploy", pick.agent_id, "; ".join(why))
        else:
            verdicts[rfn] = Verdict(
                rfn, "refine", pick.agent_id,
                "best networking agent meets neither selection criterion",
            )
    return verdicts

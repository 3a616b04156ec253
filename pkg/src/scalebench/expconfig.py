"""Experiment configuration: a flat, sectioned key-value file.

The file is parsed with configparser; every key is listed in
``DEFAULT_TEXT`` below, which doubles as the documentation and as the
default experiment.  Reproducibility hinges on the file being the single
source of truth, so unknown sections or keys are rejected, and the run
directory is named by a hash of the canonicalized content (the only
override is the output directory via the SCALEBENCH_OUT environment
variable).
"""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, replace

from .agents.dqn import DqnHyperparams
from .agents.ppo import PpoHyperparams
from .envmdp import EpisodeConfig
from .errors import ConfigError
from .methodology import TrainingSchedule
from .rewards import PROFILES, RewardSpec, SlaSpec
from .simcore import SimParams
from .workload import WorkloadConfig

KNOWN_ALGORITHMS = ("dqn", "ppo", "random", "threshold")
REWARD_NAMES = ("rfn1", "rfn2", "rfn3_1", "rfn3_2", "rfn3_3")

DEFAULT_TEXT = """\
[workload]
horizon_slots = 604800
train_len = 432000
base_level = 16
peak_level = 30
diurnal_period = 86400
noise_std = 1.0
burst_rate = 0.005
burst_magnitude = 4
seed = 7

[sim]
slot_duration = 1.0
service_time = 0.003
boot_delay = 1
shutdown_delay = 1
initial_replicas = 2
max_replicas_cap = 12
min_replicas = 1

[sla]
d_tgt = 0.020
c_tgt = 75
epsilon = 0.20

[episode]
max_steps = 3600

[rewards]
specs = rfn1, rfn2, rfn3_1, rfn3_2, rfn3_3

[schedule]
algorithms = dqn, ppo
train_episodes = 24
eval_episodes = 12
epochs = 10
seeds = 1, 2, 3, 4, 5

[scoring]
w_v = 0.5
w_d = 0.5
alpha = 0.05

[dqn]
gamma = 0.99
learning_rate = 1e-4
replay_capacity = 50000
batch_size = 64
target_sync_interval = 1000
epsilon_start = 1.0
epsilon_end = 0.05
epsilon_decay_steps = 50000

[ppo]
gamma = 0.99
learning_rate = 3e-4
clip_ratio = 0.2
gae_lambda = 0.95
rollout_length = 2048
update_epochs = 10
minibatch_size = 64
value_coef = 0.5
entropy_coef = 0.0

[output]
dir = runs
"""

# Two-day trace, three seeds, a handful of short epochs: finishes on a
# laptop in minutes instead of hours.  The narrower diurnal swing keeps the
# in-band replica count nearly constant, which the short training budget
# can actually learn.
DESK_TEXT = """\
[workload]
horizon_slots = 172800
train_len = 129600
base_level = 21
peak_level = 27
diurnal_period = 86400
noise_std = 1.0
burst_rate = 0.005
burst_magnitude = 4
seed = 7

[sim]
slot_duration = 1.0
service_time = 0.003
boot_delay = 1
shutdown_delay = 1
initial_replicas = 2
max_replicas_cap = 12
min_replicas = 1

[sla]
d_tgt = 0.020
c_tgt = 75
epsilon = 0.20

[episode]
max_steps = 3600

[rewards]
specs = rfn1

[schedule]
algorithms = dqn, random, threshold
train_episodes = 4
eval_episodes = 2
epochs = 3
seeds = 1, 2, 3

[scoring]
w_v = 0.5
w_d = 0.5
alpha = 0.05

[dqn]
gamma = 0.99
learning_rate = 1e-3
replay_capacity = 20000
batch_size = 128
target_sync_interval = 400
epsilon_start = 1.0
epsilon_end = 0.05
epsilon_decay_steps = 3000

[ppo]
gamma = 0.99
learning_rate = 3e-4
clip_ratio = 0.2
gae_lambda = 0.95
rollout_length = 1024
update_epochs = 4
minibatch_size = 64
value_coef = 0.5
entropy_coef = 0.0

[output]
dir = runs
"""

PRESETS = {"desk": DESK_TEXT}


@dataclass(frozen=True)
class ExperimentConfig:
    workload: WorkloadConfig
    train_len: int
    sim: SimParams
    sla: SlaSpec
    episode: EpisodeConfig
    reward_specs: tuple[RewardSpec, ...]
    algorithms: tuple[str, ...]
    schedule: TrainingSchedule
    w_v: float
    w_d: float
    alpha: float
    dqn_hp: DqnHyperparams
    ppo_hp: PpoHyperparams
    out_dir: str

    def validate(self) -> None:
        self.workload.validate()
        self.sim.validate()
        self.sla.validate()
        self.episode.validate()
        if not 0 < self.train_len < self.workload.horizon_slots:
            raise ConfigError(
                f"train_len must split the {self.workload.horizon_slots}-slot trace"
            )
        eval_len = self.workload.horizon_slots - self.train_len
        if self.schedule.eval_episodes * self.episode.max_steps > eval_len:
            raise ConfigError(
                f"{self.schedule.eval_episodes} evaluation episodes of "
                f"{self.episode.max_steps} steps do not fit the {eval_len}-slot split"
            )
        if self.train_len < self.episode.max_steps:
            raise ConfigError("training split is shorter than one episode")
        if not self.reward_specs:
            raise ConfigError("at least one reward spec is required")
        for spec in self.reward_specs:
            spec.validate()
        for algo in self.algorithms:
            if algo not in KNOWN_ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        self.schedule.validate()
        try:
            self.dqn_hp.validate()
            self.ppo_hp.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")


def reward_spec_by_name(name: str, sla: SlaSpec) -> RewardSpec:
    name = name.strip().lower()
    if name in ("rfn1", "rfn2"):
        return RewardSpec(name, sla=sla)
    if name.startswith("rfn3_"):
        try:
            return RewardSpec("rfn3", PROFILES[int(name.split("_", 1)[1])], sla=sla)
        except (KeyError, ValueError):
            pass
    raise ConfigError(f"unknown reward spec {name!r}; expected one of {REWARD_NAMES}")


def _parser_from_text(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_string(text)
    return parser


def _check_known_keys(parser: configparser.ConfigParser) -> None:
    reference = _parser_from_text(DEFAULT_TEXT)
    optional = {("sla", "d_terminate")}
    for section in parser.sections():
        if not reference.has_section(section):
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if not reference.has_option(section, key) and (section, key) not in optional:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")


def _from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    _check_known_keys(parser)
    defaults = _parser_from_text(DEFAULT_TEXT)
    for section in defaults.sections():
        if not parser.has_section(section):
            parser.add_section(section)
        for key, value in defaults[section].items():
            if not parser.has_option(section, key):
                parser[section][key] = value

    def geti(section, key):
        return parser.getint(section, key)

    def getf(section, key):
        return parser.getfloat(section, key)

    def getlist(section, key):
        return tuple(x.strip() for x in parser.get(section, key).split(",") if x.strip())

    try:
        workload = WorkloadConfig(
            horizon_slots=geti("workload", "horizon_slots"),
            base_level=getf("workload", "base_level"),
            peak_level=getf("workload", "peak_level"),
            diurnal_period=geti("workload", "diurnal_period"),
            noise_std=getf("workload", "noise_std"),
            burst_rate=getf("workload", "burst_rate"),
            burst_magnitude=getf("workload", "burst_magnitude"),
            seed=geti("workload", "seed"),
        )
        sim = SimParams(
            slot_duration=getf("sim", "slot_duration"),
            service_time=getf("sim", "service_time"),
            boot_delay=geti("sim", "boot_delay"),
            shutdown_delay=geti("sim", "shutdown_delay"),
            initial_replicas=geti("sim", "initial_replicas"),
            max_replicas_cap=geti("sim", "max_replicas_cap"),
            min_replicas=geti("sim", "min_replicas"),
        )
        sla = SlaSpec(
            d_tgt=getf("sla", "d_tgt"),
            c_tgt=getf("sla", "c_tgt"),
            epsilon=getf("sla", "epsilon"),
            d_terminate=getf("sla", "d_terminate") if parser.has_option("sla", "d_terminate") else None,
        )
        episode = EpisodeConfig(max_steps=geti("episode", "max_steps"))
        specs = tuple(reward_spec_by_name(n, sla) for n in getlist("rewards", "specs"))
        schedule = TrainingSchedule(
            train_episodes=geti("schedule", "train_episodes"),
            eval_episodes=geti("schedule", "eval_episodes"),
            epochs=geti("schedule", "epochs"),
            seeds=tuple(int(s) for s in getlist("schedule", "seeds")),
        )
        config = ExperimentConfig(
            workload=workload,
            train_len=geti("workload", "train_len"),
            sim=sim,
            sla=sla,
            episode=episode,
            reward_specs=specs,
            algorithms=getlist("schedule", "algorithms"),
            schedule=schedule,
            w_v=getf("scoring", "w_v"),
            w_d=getf("scoring", "w_d"),
            alpha=getf("scoring", "alpha"),
            dqn_hp=DqnHyperparams(
                gamma=getf("dqn", "gamma"),
                learning_rate=getf("dqn", "learning_rate"),
                replay_capacity=geti("dqn", "replay_capacity"),
                batch_size=geti("dqn", "batch_size"),
                target_sync_interval=geti("dqn", "target_sync_interval"),
                epsilon_start=getf("dqn", "epsilon_start"),
                epsilon_end=getf("dqn", "epsilon_end"),
                epsilon_decay_steps=geti("dqn", "epsilon_decay_steps"),
            ),
            ppo_hp=PpoHyperparams(
                gamma=getf("ppo", "gamma"),
                learning_rate=getf("ppo", "learning_rate"),
                clip_ratio=getf("ppo", "clip_ratio"),
                gae_lambda=getf("ppo", "gae_lambda"),
                rollout_length=geti("ppo", "rollout_length"),
                update_epochs=geti("ppo", "update_epochs"),
                minibatch_size=geti("ppo", "minibatch_size"),
                value_coef=getf("ppo", "value_coef"),
                entropy_coef=getf("ppo", "entropy_coef"),
            ),
            out_dir=parser.get("output", "dir"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    config.validate()
    return config


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        parser = _parser_from_text(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return _from_parser(parser)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return parse_config_text(PRESETS[name])


def default_config() -> ExperimentConfig:
    return parse_config_text(DEFAULT_TEXT)


def with_output_dir(config: ExperimentConfig, out_dir: str) -> ExperimentConfig:
    return replace(config, out_dir=out_dir)


def canonical_text(config: ExperimentConfig) -> str:
    """Deterministic serialization; the basis of the config hash.

    The output directory is deliberately excluded so that the same
    experiment hashes identically wherever its results land.
    """
    spec_names = ", ".join(s.name for s in config.reward_specs)
    sections: dict[str, dict[str, object]] = {
        "workload": {
            "horizon_slots": config.workload.horizon_slots,
            "train_len": config.train_len,
            "base_level": config.workload.base_level,
            "peak_level": config.workload.peak_level,
            "diurnal_period": config.workload.diurnal_period,
            "noise_std": config.workload.noise_std,
            "burst_rate": config.workload.burst_rate,
            "burst_magnitude": config.workload.burst_magnitude,
            "seed": config.workload.seed,
        },
        "sim": {
            "slot_duration": config.sim.slot_duration,
            "service_time": config.sim.service_time,
            "boot_delay": config.sim.boot_delay,
            "shutdown_delay": config.sim.shutdown_delay,
            "initial_replicas": config.sim.initial_replicas,
            "max_replicas_cap": config.sim.max_replicas_cap,
            "min_replicas": config.sim.min_replicas,
        },
        "sla": {
            "d_tgt": config.sla.d_tgt,
            "c_tgt": config.sla.c_tgt,
            "epsilon": config.sla.epsilon,
            "d_terminate": config.sla.d_terminate,
        },
        "episode": {"max_steps": config.episode.max_steps},
        "rewards": {"specs": spec_names},
        "schedule": {
            "algorithms": ", ".join(config.algorithms),
            "train_episodes": config.schedule.train_episodes,
            "eval_episodes": config.schedule.eval_episodes,
            "epochs": config.schedule.epochs,
            "seeds": ", ".join(str(s) for s in config.schedule.seeds),
        },
        "scoring": {"w_v": config.w_v, "w_d": config.w_d, "alpha": config.alpha},
        "dqn": {
            "gamma": config.dqn_hp.gamma,
            "learning_rate": config.dqn_hp.learning_rate,
            "replay_capacity": config.dqn_hp.replay_capacity,
            "batch_size": config.dqn_hp.batch_size,
            "target_sync_interval": config.dqn_hp.target_sync_interval,
            "epsilon_start": config.dqn_hp.epsilon_start,
            "epsilon_end": config.dqn_hp.epsilon_end,
            "epsilon_decay_steps": config.dqn_hp.epsilon_decay_steps,
        },
        "ppo": {
            "gamma": config.ppo_hp.gamma,
            "learning_rate": config.ppo_hp.learning_rate,
            "clip_ratio": config.ppo_hp.clip_ratio,
            "gae_lambda": config.ppo_hp.gae_lambda,
            "rollout_length": config.ppo_hp.rollout_length,
            "update_epochs": config.ppo_hp.update_epochs,
            "minibatch_size": config.ppo_hp.minibatch_size,
            "value_coef": config.ppo_hp.value_coef,
            "entropy_coef": config.ppo_hp.entropy_coef,
        },
    }
    out = io.StringIO()
    for section in sorted(sections):
        out.write(f"[{section}]\n")
        for key in sorted(sections[section]):
            value = sections[section][key]
            if isinstance(value, float):
                out.write(f"{key} = {value!r}\n")
            else:
                out.write(f"{key} = {value}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_text(config).encode()).hexdigest()

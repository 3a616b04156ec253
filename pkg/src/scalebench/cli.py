"""Command-line entry point.

Subcommands: gen-trace, train, validate, select, report, serve.  Exit
codes: 0 on success, 1 on runtime failure, 2 on usage or configuration
errors.  Every output file starts with a ``# config_hash=...`` provenance
line; given identical inputs each command rewrites byte-identical files
(no timestamps anywhere), so reruns are trivially diffable.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .agents.checkpoint import load_policy, save_policy
from .envmdp import normalize_observation
from .errors import ConfigError, ScalebenchError
from .expconfig import (
    ExperimentConfig,
    canonical_text,
    config_hash,
    load_config,
    preset_config,
    with_output_dir,
)
from .methodology import (
    AgentRun,
    LEARNING_ALGORITHMS,
    ScoreReport,
    select,
    score_runs,
    summarize_curves,
    train_run,
    validate_run,
)
from .svgplot import learning_curve_svg
from .workload import generate, split

OUT_ENV_VAR = "SCALEBENCH_OUT"

CURVE_HEADER = ("epoch", "mean_return", "episodes_terminated")
VALIDATION_HEADER = ("step", "v", "c_bar", "d", "reward")
SCORE_HEADER = ("agent_id", "algorithm", "rfn", "seed", "learning_score",
                "networking_score", "discarded", "reason")
VERDICT_HEADER = ("rfn", "verdict", "agent_id", "reason")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows, provenance: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={provenance}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# config_hash="):
            raise ScalebenchError(f"{path} is missing its provenance header")
        return list(csv.DictReader(fh))


def _load_run_config(run_dir: Path) -> tuple[ExperimentConfig, str]:
    config_path = run_dir / "config.ini"
    if not config_path.is_file():
        raise ConfigError(f"{run_dir} does not look like a run directory (no config.ini)")
    config = load_config(config_path)
    return config, config_hash(config)


def _resolve_config(args) -> ExperimentConfig:
    if getattr(args, "preset", None):
        config = preset_config(args.preset)
    elif getattr(args, "config", None):
        config = load_config(args.config)
    else:
        raise ConfigError("either --config FILE or --preset NAME is required")
    out_override = os.environ.get(OUT_ENV_VAR)
    if out_override:
        config = with_output_dir(config, out_override)
    return config


def _agent_files(run_dir: Path):
    checkpoints = sorted((run_dir / "checkpoints").glob("*.json"))
    if not checkpoints:
        raise ScalebenchError(f"no checkpoints found under {run_dir}")
    return checkpoints


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_trace(args) -> int:
    config = _resolve_config(args)
    trace = generate(config.workload)
    out_path = Path(args.out) if args.out else Path(config.out_dir) / "trace.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out_path)
    print(f"wrote {len(trace)} slots to {out_path}")
    return 0


def cmd_train(args) -> int:
    config = _resolve_config(args)
    digest = config_hash(config)
    run_dir = Path(config.out_dir) / digest[:12]
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.ini").write_text(canonical_text(config))

    trace = generate(config.workload)
    train_trace, eval_trace = split(trace, config.train_len)

    jobs = []
    for spec in config.reward_specs:
        for algorithm in config.algorithms:
            for seed in config.schedule.seeds:
                jobs.append((algorithm, spec, seed))

    def run_one(job):
        algorithm, spec, seed = job
        return train_run(
            algorithm, spec, seed, train_trace, eval_trace,
            config.sim, config.episode, config.schedule,
            dqn_hp=config.dqn_hp, ppo_hp=config.ppo_hp,
        )

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, jobs))
    else:
        results = [run_one(job) for job in jobs]

    for run, agent in sorted(results, key=lambda pair: pair[0].agent_id):
        _write_csv(
            run_dir / "curves" / f"{run.agent_id}.csv",
            CURVE_HEADER,
            [(r.epoch, r.mean_return, r.episodes_terminated) for r in run.curve],
            digest,
        )
        (run_dir / "checkpoints").mkdir(exist_ok=True)
        save_policy(run_dir / "checkpoints" / f"{run.agent_id}.json", agent)
    print(f"trained {len(results)} agents into {run_dir}")
    return 0


def cmd_validate(args) -> int:
    run_dir = Path(args.run_dir)
    config, digest = _load_run_config(run_dir)
    trace = generate(config.workload)
    _, eval_trace = split(trace, config.train_len)
    specs = {spec.name: spec for spec in config.reward_specs}

    def normalizer(obs):
        return normalize_observation(obs, config.sim, config.sla)

    runs: list[AgentRun] = []
    failures = []
    for path in _agent_files(run_dir):
        agent_id = path.stem
        # agent ids look like "<algo>_<rfn>_s<seed>"
        try:
            algorithm, rest = agent_id.split("_", 1)
            rfn, seed_part = rest.rsplit("_s", 1)
            seed = int(seed_part)
            spec = specs[rfn]
        except (ValueError, KeyError):
            failures.append((agent_id, "unrecognized agent id"))
            continue
        try:
            agent = load_policy(path, normalizer=normalizer, sla=config.sla)
            run = AgentRun(algorithm, rfn, seed)
            run.validation = validate_run(agent, eval_trace, spec, config.sim)
            runs.append(run)
        except (ScalebenchError, OSError, ValueError) as exc:
            failures.append((agent_id, str(exc)))
            continue
        _write_csv(
            run_dir / "validation" / f"{run.agent_id}.csv",
            VALIDATION_HEADER,
            run.validation.trajectory,
            digest,
        )

    reports = score_runs(runs, specs, len(eval_trace), config.w_v, config.w_d)
    _write_csv(
        run_dir / "scores.csv",
        SCORE_HEADER,
        [
            (r.agent_id, r.algorithm, r.rfn, r.seed, r.learning_score,
             "" if r.networking_score is None else r.networking_score,
             int(r.discarded), r.reason)
            for r in sorted(reports, key=lambda r: r.agent_id)
        ],
        digest,
    )
    (run_dir / "scores.txt").write_text(_score_table(reports, digest))
    for agent_id, message in failures:
        print(f"validation failed for {agent_id}: {message}", file=sys.stderr)
    print(f"validated {len(runs)} agents; scores in {run_dir / 'scores.csv'}")
    return 0


def _score_table(reports: list[ScoreReport], digest: str) -> str:
    lines = [f"# config_hash={digest}"]
    for title, value in (
        ("learning score", lambda r: f"{r.learning_score:.4g}"),
        ("networking score",
         lambda r: "-" if r.networking_score is None else f"{r.networking_score:.4f}"),
    ):
        lines.append(f"== {title} ==")
        rfns = sorted({r.rfn for r in reports})
        columns = sorted({(r.algorithm, r.seed) for r in reports})
        header = ["rfn"] + [f"{a}_s{s}" for a, s in columns]
        rows = [header]
        for rfn in rfns:
            row = [rfn]
            for algo, seed in columns:
                match = [r for r in reports
                         if r.rfn == rfn and r.algorithm == algo and r.seed == seed]
                row.append(value(match[0]) if match else "")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        for row in rows:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        lines.append("")
    return "\n".join(lines) + "\n"


def _load_reports(run_dir: Path) -> list[ScoreReport]:
    rows = _read_csv(run_dir / "scores.csv")
    reports = []
    for row in rows:
        reports.append(ScoreReport(
            agent_id=row["agent_id"],
            algorithm=row["algorithm"],
            rfn=row["rfn"],
            seed=int(row["seed"]),
            learning_score=float(row["learning_score"]),
            networking_score=float(row["networking_score"]) if row["networking_score"] else None,
            discarded=bool(int(row["discarded"])),
            reason=row["reason"],
        ))
    return reports


def _load_curves(run_dir: Path) -> dict[str, list[float]]:
    curves = {}
    for path in sorted((run_dir / "curves").glob("*.csv")):
        rows = _read_csv(path)
        curves[path.stem] = [float(r["mean_return"]) for r in rows]
    if not curves:
        raise ScalebenchError(f"no learning curves found under {run_dir}")
    return curves


def cmd_select(args) -> int:
    run_dir = Path(args.run_dir)
    config, digest = _load_run_config(run_dir)
    scores_path = run_dir / "scores.csv"
    if not scores_path.is_file():
        raise ScalebenchError("no scores.csv; run `scalebench validate` first")
    reports = _load_reports(run_dir)
    curves = _load_curves(run_dir)
    alpha = args.alpha if args.alpha is not None else config.alpha
    # baselines are reference points, not deployment candidates
    candidates = [r for r in reports if r.algorithm in LEARNING_ALGORITHMS]
    verdicts = select(candidates, curves, alpha=alpha)
    rows = [
        (v.rfn, v.action, v.agent_id or "", v.reason)
        for v in sorted(verdicts.values(), key=lambda v: v.rfn)
    ]
    _write_csv(run_dir / "verdicts.csv", VERDICT_HEADER, rows, digest)
    text = [f"# config_hash={digest}"]
    for rfn, action, agent_id, reason in rows:
        target = f" -> {agent_id}" if action == "deploy" else ""
        text.append(f"{rfn}: {action}{target}  ({reason})")
    (run_dir / "verdicts.txt").write_text("\n".join(text) + "\n")
    for line in text[1:]:
        print(line)
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    config, digest = _load_run_config(run_dir)
    curves = _load_curves(run_dir)
    plots_dir = run_dir / "plots"
    plots_dir.mkdir(exist_ok=True)
    rfns = sorted({spec.name for spec in config.reward_specs})
    for rfn in rfns:
        per_algo: dict[tuple[str, int], list[float]] = {}
        for agent_id, curve in curves.items():
            algorithm, rest = agent_id.split("_", 1)
            curve_rfn, seed_part = rest.rsplit("_s", 1)
            if curve_rfn == rfn:
                per_algo[(algorithm, int(seed_part))] = curve
        if not per_algo:
            print(f"no curves for {rfn}; skipping plot", file=sys.stderr)
            continue
        shortest = min(len(c) for c in per_algo.values())
        if any(len(c) != shortest for c in per_algo.values()):
            print(f"incomplete runs for {rfn}: plotting the first {shortest} epochs",
                  file=sys.stderr)
            per_algo = {k: c[:shortest] for k, c in per_algo.items()}
        summary = summarize_curves(per_algo, alpha=config.alpha)
        svg = learning_curve_svg(summary, f"learning curves: {rfn}")
        (plots_dir / f"{rfn}.svg").write_text(svg)
    scores_path = run_dir / "scores.csv"
    if scores_path.is_file():
        reports = _load_reports(run_dir)
        (run_dir / "summary.txt").write_text(_score_table(reports, digest))
    print(f"report written under {run_dir}")
    return 0


def cmd_serve(args) -> int:
    from .envbridge import BridgeServer  # local import: keeps startup light

    config = _resolve_config(args)
    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise ConfigError(f"--bind must look like host:port, got {args.bind!r}")
    server = BridgeServer(config, host, int(port_text))
    actual_host, actual_port = server.address
    print(f"scalebench bridge listening on {actual_host}:{actual_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalebench",
        description="Benchmark suite for RL-driven horizontal scaling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_options(p):
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--preset", help="built-in experiment preset (e.g. desk)")

    p = sub.add_parser("gen-trace", help="generate the workload trace CSV")
    add_config_options(p)
    p.add_argument("--out", help="output CSV path (default <out_dir>/trace.csv)")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("train", help="train every algorithm x reward x seed agent")
    add_config_options(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel training workers")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("validate", help="run validation episodes and score agents")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("select", help="emit per-reward-function deployment verdicts")
    p.add_argument("run_dir")
    p.add_argument("--alpha", type=float, default=None,
                   help="significance level (default from the config)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="emit learning-curve plots and the score summary")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="serve the environment over the TCP bridge")
    add_config_options(p)
    p.add_argument("--bind", default="127.0.0.1:7757", help="host:port to listen on")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ScalebenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

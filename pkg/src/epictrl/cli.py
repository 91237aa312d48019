"""Command-line entry point: simulate, calibrate, train, evaluate, compare.

Every command resolves its full configuration (defaults, optional config
file, repeatable --set overrides), validates all inputs, and only then
creates the output directory and writes a manifest (manifest.json) before
any other output. Outputs contain no timestamps, so rerunning a command
with the manifest's recorded configuration and seeds reproduces them byte
for byte. A manifest file can itself be passed to --config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .agents import evaluate, policy_from_checkpoint, summarize, train
from .analysis import (
    compare_strategies,
    estimate_rt,
    report_to_csv,
    report_to_text,
    rt_to_csv,
    strategy_metrics_from_eval,
)
from .baselines import null_policy, real_world_schedule, seven_work_seven_lockdown, uk_approximation_schedule
from .calibration import (
    CalibrationSpec,
    observed_from_csv,
    observed_to_csv,
    search,
    sim_series_to_observed,
    trial_log_to_csv,
)
from .config import FullConfig, apply_overrides, load_config
from .env import EpidemicEnv, write_trace
from .errors import EpictrlError
from .rewards import daily_reward
from .simulator import counts_to_csv, run_simulation

CONFIG_ENV_VAR = "EPICTRL_CONFIG"
USAGE_EXIT = 2


class UsageError(EpictrlError):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except EpictrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epictrl", description=__doc__)
    parser.add_argument("--version", action="version", version=f"epictrl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"YAML config or manifest.json (default: ${CONFIG_ENV_VAR})")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted config override, repeatable")

    p = sub.add_parser("simulate", help="run the simulator under a fixed policy")
    common(p)
    p.add_argument("--policy", default="none",
                   help="none | schedule:7w7l | schedule:uk-approx | schedule:<file> | checkpoint:<file>")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit pop_infected and beta_initial to observed data")
    common(p)
    p.add_argument("--data", required=True, help="observed CSV: date,cum_confirmed,cum_deaths")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--replications", type=int, default=3)
    p.add_argument("--schedule", default="schedule:uk-approx",
                   help="fixed policy during calibration runs")
    p.add_argument("--pop-infected-range", default="1000,50000", help="lo,hi")
    p.add_argument("--beta-range", default="0.002,0.02", help="lo,hi")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train an agent in the environment")
    common(p)
    p.add_argument("--agent", choices=("ppo", "dqn"), required=True)
    p.add_argument("--space", choices=("continuous", "discrete"), required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--checkpoint-every", type=int, default=0, help="episodes between checkpoints")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate one policy over a seed set")
    common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--seeds", default="0-9", help="e.g. 1,2,3 or 0-9")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compare several policies on identical seeds")
    common(p)
    p.add_argument("--policy", dest="policies", action="append", required=True,
                   help="policy spec, repeat at least twice")
    p.add_argument("--seeds", default="0-9")
    p.set_defaults(func=cmd_compare)
    return parser


# -- shared plumbing --------------------------------------------------------


def resolve_config(args) -> FullConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if path is not None and not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    cfg = _load_config_any(path)
    apply_overrides(cfg, args.overrides)
    cfg.validate()
    return cfg


def _load_config_any(path: str | None) -> FullConfig:
    if path is None:
        return FullConfig()
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must contain a mapping")
    if "resolved_config" in data:  # manifest round-trip
        data = data["resolved_config"]
    return FullConfig.from_dict(data)


def parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part and not part.startswith("-"):
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise UsageError(f"no seeds in {text!r}")
    return seeds


def load_policy(spec: str, cfg: FullConfig):
    """Parse a policy spec into an evaluation policy object."""
    if spec == "none":
        return null_policy()
    if spec.startswith("schedule:"):
        target = spec.split(":", 1)[1]
        if target == "7w7l":
            return seven_work_seven_lockdown(horizon_days=cfg.env.episode_days + 14)
        if target == "uk-approx":
            return uk_approximation_schedule()
        if not Path(target).is_file():
            raise UsageError(f"schedule file not found: {target}")
        return real_world_schedule(target, name=Path(target).stem)
    if spec.startswith("checkpoint:"):
        target = spec.split(":", 1)[1]
        if not Path(target).is_file():
            raise UsageError(f"checkpoint file not found: {target}")
        return policy_from_checkpoint(target, name=Path(target).stem)
    raise UsageError(f"bad policy spec {spec!r}")


def policy_label(spec: str) -> str:
    return spec.replace("schedule:", "").replace("checkpoint:", "").replace("/", "_").replace(":", "_") or "none"


def write_manifest(args, cfg: FullConfig, seeds, inputs: list[str], extra: dict | None = None) -> Path:
    """Create the out dir and write manifest.json before any other output."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": args.command,
        "tool_version": __version__,
        "resolved_config": cfg.to_dict(),
        "seeds": seeds if isinstance(seeds, list) else [seeds],
        "inputs": {p: _sha256(p) for p in inputs},
        "out_dir": str(out),
        **(extra or {}),
    }
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# -- commands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    spec = args.policy
    inputs = [p for p in [args.config] if p] + _policy_file_inputs(spec)
    policy = load_policy(spec, cfg) if spec != "none" else None
    out = write_manifest(args, cfg, args.seed, inputs, {"policy": spec})

    n_days = cfg.env.episode_days
    if spec.startswith("checkpoint:"):
        env = EpidemicEnv(cfg)
        episodes = evaluate(policy, env, [args.seed])
        series = episodes[0].series
        applied = _expand_actions(episodes[0].applied_actions, cfg.env.step_days, n_days)
    else:
        series = run_simulation(
            cfg.population, cfg.disease, cfg.interventions,
            policy=policy, n_days=n_days, seed=args.seed, decision_days=cfg.env.step_days,
        )
        lookup = policy.action_at if policy is not None else (lambda d: null_policy().action_at(d))
        applied = [lookup(_block_start(d, cfg.env.step_days)) for d in range(n_days)]

    counts_to_csv(series, str(out / "daily_counts.csv"))
    losses = []
    for counts, action in zip(series, applied):
        dr = daily_reward(counts, action, cfg.rewards, cfg.population.pop_size)
        losses.append(100.0 * (cfg.rewards.mu1 * cfg.population.pop_size - dr.r_e)
                      / (cfg.rewards.mu1 * cfg.population.pop_size))
    last = series[-1]
    summary = {
        "manifest": "manifest.json",
        "policy": spec,
        "seed": args.seed,
        "days": n_days,
        # Removal is absorbing, so everyone ever infected is in E+I+R+D.
        "cumulative_infections": last.E + last.I + last.R + last.D,
        "total_deaths": last.D,
        "mean_economic_loss_pct": float(np.mean(losses)),
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out / 'daily_counts.csv'}")
    return 0


def _block_start(day: int, step_days: int) -> int:
    return (day // step_days) * step_days


def _expand_actions(step_actions, step_days: int, n_days: int):
    out = []
    for i in range(n_days):
        out.append(step_actions[min(i // step_days, len(step_actions) - 1)])
    return out


def _policy_file_inputs(spec: str) -> list[str]:
    for prefix in ("schedule:", "checkpoint:"):
        if spec.startswith(prefix):
            target = spec.split(":", 1)[1]
            if target not in ("7w7l", "uk-approx"):
                if not Path(target).is_file():
                    raise UsageError(f"policy file not found: {target}")
                return [target]
    return []


def cmd_calibrate(args) -> int:
    cfg = resolve_config(args)
    if not Path(args.data).is_file():
        raise UsageError(f"observed data file not found: {args.data}")
    observed = observed_from_csv(args.data)
    policy = load_policy(args.schedule, cfg)
    try:
        pi_lo, pi_hi = (float(x) for x in args.pop_infected_range.split(","))
        b_lo, b_hi = (float(x) for x in args.beta_range.split(","))
    except ValueError as exc:
        raise UsageError(f"bad range: {exc}") from exc
    spec = CalibrationSpec(
        pop_infected_range=(pi_lo, pi_hi),
        beta_range=(b_lo, b_hi),
        trials=args.trials,
        replications=args.replications,
        seed=args.seed,
    )
    spec.validate()
    inputs = [p for p in [args.config, args.data] if p] + _policy_file_inputs(args.schedule)
    out = write_manifest(args, cfg, args.seed, inputs, {
        "data": args.data, "trials": args.trials, "replications": args.replications,
        "schedule": args.schedule,
        "pop_infected_range": [pi_lo, pi_hi], "beta_range": [b_lo, b_hi],
    })

    result = search(spec, observed, cfg.population, cfg.disease, cfg.interventions,
                    policy=policy, n_days=min(len(observed), cfg.env.episode_days))
    trial_log_to_csv(result.trials, str(out / "trial_log.csv"))

    with open(out / "best_params.yaml", "w", encoding="utf-8") as fh:
        fh.write("# Calibrated overlay; pass to `epictrl simulate --config`.\n")
        fh.write("population:\n")
        fh.write(f"  pop_infected: {result.best_pop_infected:.8g}\n")
        fh.write(f"  beta_initial: {result.best_beta_initial:.8g}\n")

    import dataclasses as _dc

    best_pop = _dc.replace(cfg.population, pop_infected=result.best_pop_infected,
                           beta_initial=result.best_beta_initial)
    rep_seed = int(np.random.SeedSequence((args.seed, 0, 0)).generate_state(1)[0])
    series = run_simulation(best_pop, cfg.disease, cfg.interventions, policy=policy,
                            n_days=min(len(observed), cfg.env.episode_days), seed=rep_seed)
    fitted = sim_series_to_observed(series, best_pop.pop_scale, spec.start_date)
    with open(out / "fit_comparison.csv", "w", encoding="utf-8") as fh:
        fh.write("date,obs_confirmed,sim_confirmed,obs_deaths,sim_deaths\n")
        obs_by_date = {d: i for i, d in enumerate(observed.dates)}
        for i, d in enumerate(fitted.dates):
            j = obs_by_date.get(d)
            if j is None:
                continue
            fh.write(f"{d.isoformat()},{observed.cum_confirmed[j]:.6g},{fitted.cum_confirmed[i]:.6g},"
                     f"{observed.cum_deaths[j]:.6g},{fitted.cum_deaths[i]:.6g}\n")
    print(f"best loss {result.best_loss:.6g} at pop_infected={result.best_pop_infected:.6g}, "
          f"beta_initial={result.best_beta_initial:.6g}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    if args.agent == "dqn" and args.space != "discrete":
        raise UsageError("dqn requires --space discrete")
    if args.episodes < 0:
        raise UsageError("--episodes must be >= 0")
    if args.resume and not Path(args.resume).is_file():
        raise UsageError(f"resume checkpoint not found: {args.resume}")
    cfg.env.action_space_kind = args.space
    inputs = [p for p in [args.config, args.resume] if p]
    out = write_manifest(args, cfg, args.seed, inputs, {
        "agent": args.agent, "space": args.space, "episodes": args.episodes,
        "resume": args.resume,
    })

    result = train(
        env_factory=lambda: EpidemicEnv(cfg),
        agent_kind=args.agent,
        space_kind=args.space,
        config=cfg,
        total_episodes=args.episodes,
        seed=args.seed,
        checkpoint_dir=str(out),
        checkpoint_every=args.checkpoint_every or None,
        resume_from=args.resume,
    )
    with open(out / "learning_curve.csv", "w", encoding="utf-8") as fh:
        fh.write("episode,return\n")
        for i, ret in enumerate(result.curve):
            fh.write(f"{i},{ret:.10g}\n")
    print(f"trained {args.agent}/{args.space} for {len(result.curve)} episodes; "
          f"checkpoint {out / 'checkpoint_final.json'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    seeds = parse_seeds(args.seeds)
    policy = load_policy(args.policy, cfg)
    inputs = [p for p in [args.config] if p] + _policy_file_inputs(args.policy)
    out = write_manifest(args, cfg, seeds, inputs, {"policy": args.policy})

    env = EpidemicEnv(cfg)
    episodes = evaluate(policy, env, seeds, keep_traces=True)
    with open(out / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write("seed,return,cumulative_infections,deaths,mean_economic_loss_pct\n")
        for ep in episodes:
            fh.write(f"{ep.seed},{ep.total_return:.10g},{ep.cumulative_infections},"
                     f"{ep.total_deaths},{100.0 * ep.mean_economic_loss:.10g}\n")
    for ep in episodes:
        write_trace(str(out / f"trace_seed{ep.seed}.jsonl"), ep.step_records)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump({"manifest": "manifest.json", "policy": args.policy, **summarize(episodes)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"evaluated {args.policy} on {len(seeds)} seeds")
    return 0


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    if len(args.policies) < 2:
        raise UsageError("compare needs at least two --policy specs")
    seeds = parse_seeds(args.seeds)
    policies = [(policy_label(s), load_policy(s, cfg)) for s in args.policies]
    labels = [label for label, _ in policies]
    if len(set(labels)) != len(labels):
        labels = [f"{label}#{i}" for i, label in enumerate(labels)]
    inputs = [p for p in [args.config] if p]
    for s in args.policies:
        inputs.extend(_policy_file_inputs(s))
    out = write_manifest(args, cfg, seeds, inputs, {"policies": args.policies})

    env = EpidemicEnv(cfg)
    duration = cfg.disease.mean_infectious_duration
    metric_sets = []
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for label, (_, policy) in zip(labels, policies):
        episodes = evaluate(policy, env, seeds)
        metric_sets.append(strategy_metrics_from_eval(label, episodes, duration))
        for ep in episodes:
            rt, _ = estimate_rt(ep.series, duration)
            rt_to_csv(rt, str(out / f"rt_{label}_seed{ep.seed}.csv"))
            counts_to_csv(ep.series, str(trace_dir / f"{label}_seed{ep.seed}.csv"))

    rows = compare_strategies(metric_sets)
    report_to_csv(rows, str(out / "report.csv"))
    text = report_to_text(rows)
    with open(out / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())

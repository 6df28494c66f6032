"""Command-line entry point: train, eval, replay, sweep, schema."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import config as config_mod
from . import evalkit
from . import orchestrator as orch
from .advisor import AdvisorUnavailable
from .env import EpisodeLog, replay_log
from .errors import ConfigMismatch, ConfigParseError, ValidationError, VersionMismatch

EXIT_OK, EXIT_CONFIG, EXIT_ADVISOR = 0, 2, 3


def _load_config(path):
    return config_mod.load(path) if path else config_mod.default_config()


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.episodes is not None:
        cfg = replace(cfg, run=replace(cfg.run, episodes=args.episodes))
        config_mod.validate(cfg)
    out = Path(args.out)

    def progress(ep, reward):
        if not args.quiet and (ep % 10 == 0 or ep == cfg.run.episodes):
            print(f"episode {ep}: reward {reward:.3f}", flush=True)

    res = orch.train(cfg, out, resume=args.resume, progress=progress)
    print(json.dumps({"episodes": res.episodes, "final_checkpoint": str(res.final_checkpoint),
                      "advisor_queries": res.advisor_queries}))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = config_mod.load(args.config) if args.config else orch.checkpoint_config(args.ckpt)
    if args.policy:
        cfg = orch.with_policy(cfg, args.policy)
    kind = orch.PolicyKind.from_config(cfg)
    agent = orch.load_agent(args.ckpt, cfg) if kind.uses_actor else None
    logs = orch.evaluate(cfg, agent, args.episodes, seed=args.seed)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        config_mod.write_effective_config(cfg, d)
        for i, lg in enumerate(logs, 1):
            lg.write(d / f"eval_{i:04d}.jsonl")
    summary = evalkit.summarize([evalkit.outcome_from_log(lg) for lg in logs]) if logs else {"n_episodes": 0}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _config_near(log_path: Path):
    for d in (log_path.parent, log_path.parent.parent):
        p = d / "effective_config.json"
        if p.exists():
            return config_mod.load(p)
    return None


def cmd_replay(args) -> int:
    path = Path(args.log)
    log = EpisodeLog.read(path)
    cfg = config_mod.load(args.config) if args.config else (_config_near(path) or config_mod.default_config())
    again = replay_log(log, cfg)
    same = again == log.records
    print(json.dumps({"steps": len(log.records), "reward": log.total_reward, "identical": same}))
    return EXIT_OK if same else 1


def cmd_sweep(args) -> int:
    spec = evalkit.SweepSpec.load(args.spec)

    def progress(row):
        status = "failed: " + row.error if row.failed else json.dumps(
            {k: round(row.metrics[k], 4) for k in evalkit.METRICS})
        print(f"{row.variable}={evalkit._value_text(row.value)} {row.policy} {status}", flush=True)

    rows = evalkit.run_sweep(spec, args.out, progress=progress)
    return EXIT_OK if not any(r.failed for r in rows) else 1


def cmd_schema(args) -> int:
    text = json.dumps(config_mod.json_schema(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavtraj", description="UAV data-collection trajectory planning")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train", help="train a policy")
    p.add_argument("--config", help="run configuration JSON (defaults when omitted)")
    p.add_argument("--resume", help="checkpoint directory to continue from")
    p.add_argument("--out", default="runs/train", help="output directory")
    p.add_argument("--episodes", type=int, help="override run.episodes")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on fresh scenarios")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--seed", type=int, default=None, help="evaluation scenario stream")
    p.add_argument("--config", help="override the config stored with the checkpoint")
    p.add_argument("--policy", choices=config_mod.POLICIES)
    p.add_argument("--out", help="directory for evaluation episode logs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="re-fly a logged episode and check it reproduces")
    p.add_argument("--log", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schema", help="print the configuration JSON schema")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schema)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigParseError, ValidationError, ConfigMismatch, VersionMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdvisorUnavailable as exc:
        print(f"advisor unavailable, run aborted (resume from the latest checkpoint): {exc}",
              file=sys.stderr)
        return EXIT_ADVISOR


if __name__ == "__main__":
    sys.exit(main())

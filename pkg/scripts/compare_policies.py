"""Evaluate SAC-only and hybrid control with one checkpoint on the same evaluation scenarios."""

import argparse
import json

from uavtraj import evalkit
from uavtraj import orchestrator as orch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ckpt", required=True, help="checkpoint directory, e.g. runs/reduced_sac/checkpoints/final")
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--threshold", type=float, default=15.0, help="advisor trigger distance d_th (m)")
    args = ap.parse_args()

    cfg = orch.checkpoint_config(args.ckpt)
    agent = orch.load_agent(args.ckpt, cfg)
    rows = {}
    for tag in ("sac", "hybrid"):
        c = orch.with_policy(cfg, tag, threshold_m=args.threshold)
        logs = orch.evaluate(c, agent, args.episodes, seed=cfg.seeds.eval)
        rows[tag] = evalkit.summarize([evalkit.outcome_from_log(lg) for lg in logs])
    for tag, m in rows.items():
        print(tag.ljust(7), "  ".join(f"{k} {m[k]:.3f}" for k in evalkit.METRICS))
    print(json.dumps(rows, sort_keys=True))


if __name__ == "__main__":
    main()

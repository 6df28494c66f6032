"""Train SAC-only on the reduced setting, then report the reward trend and evaluation metrics."""

import argparse
import json
import time

import numpy as np

from uavtraj import config as config_mod
from uavtraj import evalkit
from uavtraj import orchestrator as orch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/reduced_sac")
    ap.add_argument("--episodes", type=int, default=500)
    ap.add_argument("--policy", default="sac", choices=config_mod.POLICIES)
    ap.add_argument("--eval-episodes", type=int, default=20)
    args = ap.parse_args()

    cfg = config_mod.reduced_config(args.policy, episodes=args.episodes)
    t0 = time.perf_counter()

    def progress(ep, reward):
        if ep % 50 == 0:
            print(f"episode {ep}: reward {reward:.2f} ({time.perf_counter() - t0:.0f} s)", flush=True)

    res = orch.train(cfg, args.out, progress=progress)
    rw = np.asarray(res.rewards)
    agent = orch.load_agent(res.final_checkpoint, cfg)
    outs = [evalkit.outcome_from_log(lg) for lg in orch.evaluate(cfg, agent, args.eval_episodes)]
    summary = evalkit.summarize(outs)
    summary.update(first50=float(rw[:50].mean()), last50=float(rw[-50:].mean()),
                   checkpoint=str(res.final_checkpoint), seconds=round(time.perf_counter() - t0, 1))
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()

"""Sweep the advisor trigger distance over one trained checkpoint and write metrics.csv."""

import argparse

from uavtraj import evalkit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ckpt", required=True)
    ap.add_argument("--out", default="runs/threshold_sweep")
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--values", type=float, nargs="+", default=[5, 10, 15, 20, 25])
    args = ap.parse_args()

    spec = evalkit.SweepSpec("d_th", tuple(args.values), episodes=args.episodes, policies=("hybrid",),
                             checkpoint=args.ckpt)
    for row in evalkit.run_sweep(spec, args.out):
        m = row.metrics or {}
        print(f"d_th={evalkit._value_text(row.value)}", row.error or
              "  ".join(f"{k} {m[k]:.3f}" for k in evalkit.METRICS))
    print(f"wrote {args.out}/metrics.csv")


if __name__ == "__main__":
    main()

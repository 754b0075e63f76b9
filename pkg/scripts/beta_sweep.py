"""Roughness of the mean energy against beta and the sample count.

    python3 scripts/beta_sweep.py --reps 5 --out results/

Each repetition uses a different base seed; the table reports the mean
roughness per (beta, mc) and the smallest mc that reaches the threshold.
"""

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from stochwave import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="sigma-5v")
    ap.add_argument("--betas", default="0,0.25,0.49")
    ap.add_argument("--mc-list", default="400,600,800,1000,1400")
    ap.add_argument("--k-level", type=int, default=8)
    ap.add_argument("--h-level", type=int, default=6)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--threshold", type=float, default=0.05)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    betas = tuple(float(b) for b in args.betas.split(","))
    mcs = tuple(int(m) for m in args.mc_list.split(","))

    rough = defaultdict(list)
    for rep in range(args.reps):
        sw = ex.run_beta_sweep(args.preset, betas, 2.0**-args.k_level, 2**args.h_level, mcs,
                               base_seed=1000 * rep, T=args.T)
        ex.write_atomic(args.out / f"beta_sweep_{args.preset}_rep{rep}.csv", sw.to_csv())
        for b, mc, r in sw.rows:
            rough[b, mc].append(r)

    print(f"{args.preset}: mean roughness over {args.reps} repetition(s)")
    print("beta  " + "".join(f"{m:>10}" for m in mcs) + "   min_mc")
    for b in betas:
        means = [np.mean(rough[b, m]) for m in mcs]
        first = next((m for m, r in zip(mcs, means) if r < args.threshold), None)
        print(f"{b:<5} " + "".join(f"{r:>10.4f}" for r in means) + f"   {first}")


if __name__ == "__main__":
    main()

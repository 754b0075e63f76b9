"""Moments of the plain, Ito-weighted and approximate increments.

    python3 scripts/increment_stats.py --extra 4

``--extra`` sets how many dyadic levels below k^2 the path is resolved; at 0
the approximate and the reference Ito increments coincide.
"""

import argparse

import numpy as np

from stochwave.noise import NoiseConfig, coarse_increments, sample_path, stream_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="3,4,5")
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--extra", type=int, default=4)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    levels = [int(j) for j in args.levels.split(",")]
    cfg = NoiseConfig(1, 2 * max(levels) + args.extra)
    n_paths = -(-args.steps // 2 ** min(levels))
    paths = [sample_path(cfg, stream_seed(args.seed, m)) for m in range(n_paths)]

    print(f"fine level {cfg.fine_level}, {n_paths} paths")
    print(f"{'k':>8} {'steps':>7} {'VarW/k':>8} {'VarTil/(k3/3)':>14} {'E|hat-til|2/k4':>15} {'/(k5/3)':>8}")
    for j in levels:
        k = 2.0**-j
        inc = [coarse_increments(p, k) for p in paths]
        dW = np.concatenate([i.dW[:, 0] for i in inc])
        til = np.concatenate([i.dW_tilde[:, 0] for i in inc])
        hat = np.concatenate([i.dW_hat[:, 0] for i in inc])
        ms = np.mean((hat - til) ** 2)
        print(f"{'2^-%d' % j:>8} {dW.size:>7} {dW.var() / k:>8.4f} {til.var() / (k**3 / 3):>14.4f} "
              f"{ms / k**4:>15.5f} {ms / (k**5 / 3):>8.4f}")


if __name__ == "__main__":
    main()

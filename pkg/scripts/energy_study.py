"""Mean energy trajectories for the conservative and the non-conservative noise.

    python3 scripts/energy_study.py --mc 1000 --out results/
"""

import argparse
from pathlib import Path

from stochwave import experiments as ex

CASES = [("zero-noise", 0.0), ("sigma-u-half", 0.0), ("sigma-v-half", 0.25)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mc", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k-level", type=int, default=10)
    ap.add_argument("--h-level", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name, beta in CASES:
        s = ex.run_energy_study(name, 1, beta, 2.0**-args.k_level, 2**args.h_level,
                                args.mc, base_seed=args.seed)
        ex.write_atomic(args.out / f"energy_{name}.csv", s.to_csv())
        change = s.e_total_mean[-1] / s.e_total_mean[1] - 1
        print(f"{name:<13} beta={beta:<4} E(t1)={s.e_total_mean[1]:.5g} E(T)={s.e_total_mean[-1]:.5g} "
              f"change={change:+.2%} two-step drift={s.relative_drift('two_step_mean'):.2e} "
              f"excluded={s.excluded}")


if __name__ == "__main__":
    main()

"""Doubling-budget search for T* across dimensions, clipped method vs SGD on f_delta.

    python3 scripts/dimension_sweep.py --dims 4 16 64 --trials 5 --out results/sweep
"""

import argparse
import logging

from zo_goldstein.config import ExperimentConfig
from zo_goldstein.harness import sweep_dimension


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", type=int, nargs="+", default=[4, 16, 64])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--T-cap", type=int, default=1 << 22)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--out", default="results/sweep")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = ExperimentConfig(
        mode="sweep", objective="sphere_valley", start_radius=3.0, delta=args.delta, eps=args.eps,
        dims=sorted(args.dims), trials=args.trials, T_cap=args.T_cap, seed=args.seed,
    )
    report = sweep_dimension(cfg, cfg.dims, cfg.trials)
    for row in report.tables["scaling"]:
        print(row)
    for path in report.write(args.out):
        print(path)


if __name__ == "__main__":
    main()

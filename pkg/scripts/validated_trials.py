"""Repeated trials of the restart-and-validate method; reports the sampled-hull success rate.

    python3 scripts/validated_trials.py --trials 40 --gamma 0.25 --out results/validated
"""

import argparse
import logging

import numpy as np

from zo_goldstein.harness import Report, substream
from zo_goldstein.highprob import derive_validation_params, run_validated
from zo_goldstein.objective import make_builtin
from zo_goldstein.optimizer import derive_hyperparams
from zo_goldstein.stationarity import goldstein_upper_certificate


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--T", type=int, default=200_000)
    p.add_argument("--validation-budget", type=int, default=100_000, help="upper bound on M * S")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/validated")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    obj = make_builtin("sphere_valley", args.d)
    x0 = np.zeros(args.d)
    x0[0] = 3.0
    config = derive_hyperparams(2.0, obj.lipschitz_bound, args.delta, args.eps, args.d, T=args.T)
    raw_S = derive_validation_params(args.gamma, args.d, obj.lipschitz_bound, config.M, args.eps).S
    c_S = min(1.0, (args.validation_budget // config.M) / raw_S)
    vp = derive_validation_params(args.gamma, args.d, obj.lipschitz_bound, config.M, args.eps, c_S=c_S)
    logging.info("M=%d R=%d S=%d (c_S=%.3g)", config.M, vp.R, vp.S, c_S)

    report = Report(config_echo={**vars(args), "resolved": {**config.as_dict(), "R": vp.R, "S": vp.S, "c_S": c_S}})
    for i in range(args.trials):
        vr = run_validated(obj, x0, config, vp, substream(args.seed, i, 0), M=config.M)
        hull = goldstein_upper_certificate(obj, vr.x_out, args.delta, 2000, substream(args.seed, i, 1))
        report.rows.append({"trial": i, "r_star": vr.r_star, "norm_ghat": float(vr.norms[vr.r_star - 1]), "hull_cert": hull.value, "evaluations": vr.total_evaluations})
        logging.info("trial %d: r*=%d |ghat|=%.4f hull=%.4f", i, vr.r_star, vr.norms[vr.r_star - 1], hull.value)
    rate = np.mean([r["hull_cert"] <= args.eps for r in report.rows])
    print(f"success rate: {rate:.2%}")
    for path in report.write(args.out):
        print(path)


if __name__ == "__main__":
    main()

"""Compare the five samplers on the toy mixture model.

Each sequential sampler records the L2 distance of its population to the
exact posterior after every iteration, so the figure shows how much
simulation each one spends to reach a given accuracy. Rejection ABC is run
at the final tolerance of APMC with the same number of particles.

Usage::

    python demos/toy_comparison.py --n 1000 --out toy_comparison.svg
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from apmc.algorithms import (
    ApmcConfig,
    PmcConfig,
    RsmcConfig,
    SmcConfig,
    run_apmc,
    run_pmc,
    run_rejection,
    run_rsmc,
    run_smc,
)
from apmc.metrics import GridSpec, L2Monitor
from apmc.models import ToyModel


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="toy_comparison.svg")
    args = parser.parse_args()

    toy = ToyModel()
    monitor = L2Monitor(GridSpec.for_prior(toy.prior, 300), toy.exact_posterior)
    runs = {
        "APMC": run_apmc(toy.prior, toy, ApmcConfig(n=args.n, alpha=0.5, p_acc_min=0.01), args.seed,
                         monitor=monitor),
        "PMC": run_pmc(toy.prior, toy, PmcConfig(n=args.n), args.seed, monitor=monitor),
        "RSMC": run_rsmc(toy.prior, toy, RsmcConfig(n=args.n), args.seed, monitor=monitor),
        "SMC": run_smc(toy.prior, toy, SmcConfig(n=args.n, alpha=0.95), args.seed, monitor=monitor),
    }
    apmc_sample = runs["APMC"][0]
    rej_sample, rej_trace = run_rejection(toy.prior, toy, len(apmc_sample), apmc_sample.epsilon, args.seed,
                                          monitor=monitor)

    print(f"{'algorithm':<10}{'sims':>12}{'final eps':>12}{'L2':>10}")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, (sample, trace) in runs.items():
        l2 = trace.column("l2")
        ax.plot(trace.column("n_sims"), l2, marker=".", label=name)
        print(f"{name:<10}{trace.n_sims:>12d}{sample.epsilon:>12.4g}{l2[-1]:>10.4f}")
    rej_l2 = rej_trace.column("l2")[-1]
    ax.plot([rej_trace.n_sims], [rej_l2], "k*", ms=10, label="rejection")
    print(f"{'rejection':<10}{rej_trace.n_sims:>12d}{rej_sample.epsilon:>12.4g}{rej_l2:>10.4f}")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("number of simulations")
    ax.set_ylabel("L2 distance to exact posterior")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

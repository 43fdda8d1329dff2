"""Distinct-particle counts per iteration.

SMC moves particles with one Metropolis-Hastings step, so rejected moves
and resampling leave bit-identical copies and the distinct count decays.
APMC and PMC draw every new particle afresh and never duplicate.

Usage::

    python demos/degeneracy.py --out degeneracy.svg
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from apmc.algorithms import ApmcConfig, PmcConfig, SmcConfig, run_apmc, run_pmc, run_smc
from apmc.models import ToyModel


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="degeneracy.svg")
    args = parser.parse_args()

    toy = ToyModel()
    _, smc = run_smc(toy.prior, toy, SmcConfig(n=args.n, alpha=0.9), args.seed)
    _, apmc = run_apmc(toy.prior, toy, ApmcConfig(n=args.n, alpha=0.5), args.seed)
    _, pmc = run_pmc(toy.prior, toy, PmcConfig(n=args.n), args.seed)

    fig, axes = plt.subplots(1, 3, figsize=(11, 3.5), sharey=True)
    for ax, (name, trace) in zip(axes, [("SMC", smc), ("APMC", apmc), ("PMC", pmc)]):
        d = trace.column("n_distinct")
        ax.plot(np.arange(len(d)), d, marker=".")
        if name == "SMC":
            for t in np.flatnonzero(trace.column("resampled") == 1):
                ax.axvline(t, color="0.8", lw=0.8, zorder=0)
        ax.set_title(name)
        ax.set_xlabel("iteration")
        print(f"{name}: {len(d)} iterations, distinct count min {d.min():.0f} max {d.max():.0f}")
    axes[0].set_ylabel("distinct particles")
    fig.tight_layout()
    fig.savefig(args.out)
    print(f"wrote {args.out} (grey lines mark SMC resampling)")


if __name__ == "__main__":
    main()

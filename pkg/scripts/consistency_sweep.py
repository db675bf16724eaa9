"""Median relative error against trajectory length on a small graph.

Each replication simulates once at the longest length and is estimated on
prefixes, so errors at different lengths share the same path.

    python3 scripts/consistency_sweep.py --graph path --n 5 --replications 20
"""
import argparse
import math

import numpy as np

from ctmpfit.experiment import PARAMETERS, ExperimentConfig, run_replications


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="contact")
    ap.add_argument("--graph", default="path")
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--replications", type=int, default=20)
    ap.add_argument("--lengths", default="1000,10000,100000,1000000")
    ap.add_argument("--methods", default="wls,nnls,lad")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    lengths = [int(v) for v in args.lengths.split(",")]
    methods = args.methods.split(",")
    cfg = ExperimentConfig(model=args.model, graph=args.graph, n=args.n, replications=args.replications,
                           lengths=lengths, theta_low=0.5, theta_high=3.0, methods=methods, seed=args.seed)
    rows = run_replications(cfg, args.workers)
    print(f"{'length':>8} {'method':>6} " + " ".join(f"{p:>9}" for p in PARAMETERS) + "   (median relative error)")
    for length in lengths:
        for method in methods:
            meds = []
            for p in PARAMETERS:
                vals = [r["abs_error"] / r["true"] for r in rows
                        if r["length"] == length and r["method"] == method and r["parameter"] == p]
                meds.append(np.median([v if math.isfinite(v) else math.inf for v in vals]))
            print(f"{length:>8} {method:>6} " + " ".join(f"{m:9.4f}" for m in meds))


if __name__ == "__main__":
    main()

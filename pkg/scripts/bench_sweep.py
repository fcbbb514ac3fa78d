#!/usr/bin/env python3
"""Sweep sort variants across distributions and thread counts, CSV to stdout.

Example:
    python scripts/bench_sweep.py --n 4194304 --threads 1 2 4 --reps 3
"""

import argparse
import csv
import sys

from vmradix.bench import BenchSpec, run


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1 << 22)
    p.add_argument("--threads", type=int, nargs="+", default=[1, 2])
    p.add_argument("--dists", nargs="+",
                   default=["uniform", "duplicates:16", "msd-skew:0.9"])
    p.add_argument("--values", type=int, choices=(0, 32), default=0)
    p.add_argument("--reps", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["algo", "dist", "threads", "n", "value_bits",
                "best_m_per_s", "median_m_per_s", "verified"])
    for dist in args.dists:
        for threads in args.threads:
            for algo in ("vm", "vmwc", "ref"):
                spec = BenchSpec(n=args.n, value_bits=args.values, algo=algo,
                                 threads=threads, dist=dist, seed=args.seed,
                                 reps=args.reps, large_pages=False)
                _, summary = run(spec)
                w.writerow([algo, dist, threads, args.n, args.values,
                            f"{summary['items_per_second_best'] / 1e6:.2f}",
                            f"{summary['items_per_second_median'] / 1e6:.2f}",
                            summary["verified"]])
                sys.stdout.flush()


if __name__ == "__main__":
    main()

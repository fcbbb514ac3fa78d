#!/usr/bin/env python3
"""Show how little physical memory the over-reserved counting sort commits.

For a fixed input, sweep the bucket count and print reserved vs committed
bytes plus the model bound n*item + 2*buckets*page.
"""

import argparse

import vmradix as vr
from vmradix.reservoir import PAGE_BYTES


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1 << 20)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    items = vr.generate(args.n, "uniform", seed=args.seed)
    print(f"n={args.n}, item=4B, page={PAGE_BYTES}B")
    print(f"{'buckets':>8} {'reserved':>16} {'committed':>14} {'bound':>14} "
          f"{'ratio':>9}")
    for lane_bits in (4, 6, 8):
        buckets = 1 << lane_bits
        with vr.counting_sort(items, lane_bits=lane_bits,
                              shift=32 - lane_bits) as lanes:
            reserved = lanes.region.reserved_bytes
            committed = lanes.region.committed_bytes
            bound = args.n * 4 + 2 * buckets * PAGE_BYTES
            print(f"{buckets:>8} {reserved:>16,} {committed:>14,} "
                  f"{bound:>14,} {reserved / committed:>8.1f}x")


if __name__ == "__main__":
    main()

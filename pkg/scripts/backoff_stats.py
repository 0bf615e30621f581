#!/usr/bin/env python3
"""Empirical backoff distribution per attempt count.

Draws N seeded values at each attempt count, prints the window, the sample
range and mean, and a chi-square uniformity p-value.

    python3 scripts/backoff_stats.py --draws 100000 --max-attempts 8
"""

import argparse
from collections import Counter

from scipy.stats import chisquare

from meshtx.access import BackoffParams, backoff_val, contention_window


def sample(attempts, bp, draws, seed):
    state, counts = seed, Counter()
    for _ in range(draws):
        v, state = backoff_val(attempts, bp, state)
        counts[v] += 1
    return counts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=100_000)
    ap.add_argument("--max-attempts", type=int, default=7)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--cw-min", type=int, default=15)
    ap.add_argument("--cw-max", type=int, default=1023)
    args = ap.parse_args()

    bp = BackoffParams(cw_min=args.cw_min, cw_max=args.cw_max)
    print(f"{'attempts':>8} {'cw':>5} {'min':>4} {'max':>5} {'mean':>8} {'expect':>8} {'p':>7}")
    for a in range(args.max_attempts + 1):
        cw = contention_window(a, bp)
        counts = sample(a, bp, args.draws, args.seed + a)
        mean = sum(v * n for v, n in counts.items()) / args.draws
        p = chisquare([counts[i] for i in range(cw + 1)]).pvalue
        print(f"{a:>8} {cw:>5} {min(counts):>4} {max(counts):>5} {mean:>8.2f} {cw / 2:>8.2f} {p:>7.3f}")


if __name__ == "__main__":
    main()

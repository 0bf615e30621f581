#!/usr/bin/env python3
"""Delivery, retries and collisions as the number of contending stations grows.

Every station sends a burst of MSDUs to station 0 starting at nearly the
same instant. Results are averaged over several seeds.

    python3 scripts/contention_sweep.py --stations 2 4 8 --seeds 5
"""

import argparse
from statistics import mean

from meshtx.frames import MacAddress
from meshtx.scenario import AccessParams, NodeConfig, Scenario, TrafficItem
from meshtx.sim import run


def make(stations, msdus, size, gap, seed, threshold):
    nodes = [NodeConfig(0, MacAddress.parse("02:00:00:00:00:00"))]
    for i in range(1, stations + 1):
        traffic = tuple(TrafficItem(i + k * gap, 0, bytes(size)) for k in range(msdus))
        nodes.append(NodeConfig(i, MacAddress.parse(f"02:00:00:00:01:{i:02x}"), traffic=traffic))
    return Scenario(
        nodes=tuple(nodes), access=AccessParams(threshold=threshold, retry_backoff=True),
        seed=seed, horizon=10_000_000, name=f"sweep-{stations}",
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stations", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--msdus", type=int, default=5)
    ap.add_argument("--size", type=int, default=500)
    ap.add_argument("--gap", type=int, default=3000, help="µs between a station's MSDUs")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--threshold", type=int, default=10)
    args = ap.parse_args()

    print(f"{'stations':>8} {'delivered':>10} {'failed':>7} {'retries':>8} {'collisions':>10} {'end_ms':>8}")
    for n in args.stations:
        rows = []
        for seed in range(args.seeds):
            rep = run(make(n, args.msdus, args.size, args.gap, seed, args.threshold))
            senders = [r for r in rep.nodes if r.id != 0]
            rows.append((
                sum(r.delivered for r in senders), sum(r.failed for r in senders),
                sum(r.retries for r in senders), sum(r.collisions for r in rep.nodes), rep.end_time / 1000,
            ))
        d, f, r, c, t = (mean(col) for col in zip(*rows))
        print(f"{n:>8} {d:>10.1f} {f:>7.1f} {r:>8.1f} {c:>10.1f} {t:>8.2f}")


if __name__ == "__main__":
    main()

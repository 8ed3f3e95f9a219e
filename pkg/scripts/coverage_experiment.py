"""Coverage certificate, endpoint order and stability probe for one irrational slope.

    python scripts/coverage_experiment.py --slope "1,sqrt(2)" --out runs/coverage.json
"""

import argparse
import functools
import json
import time

from windtree.billiard import parse_direction
from windtree.config import build_ringed
from windtree.exactnum import Scalar
from windtree.extract import build_table
from windtree.iet import verify_certificate
from windtree.minimality import cover_coverage, endpoint_order, stability_probe, star_connection_scan

print = functools.partial(print, flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slope", default="1,sqrt(2)")
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--r", default="1/4")
    ap.add_argument("--cover-level", type=int, default=1)
    ap.add_argument("--bound", type=int, default=10 ** 5)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    d, _ = parse_direction(args.slope)
    f = build_ringed(args.N, args.r)
    table = build_table(f, args.N)

    t0 = time.perf_counter()
    star = star_connection_scan(table, d, args.cover_level, 10 ** 4)
    print(f"*-connections up to 10^4 steps: {len(star)}")
    res = cover_coverage(table, d, args.cover_level, args.bound)
    print(f"coverage ok={res.ok} K={res.K} L={res.L} over {len(res.certificates)} intervals "
          f"({time.perf_counter() - t0:.1f}s)")
    if not res.ok:
        return
    replay = all(verify_certificate(res.extracted.iet, c) for c in res.certificates)
    print(f"certificates replay: {replay}")

    rec = endpoint_order(res.extracted, res.K, res.L, args.cover_level)
    print(f"endpoint collection: {len(rec.points)} points, tags {rec.tags()}, distinct={rec.distinct}, "
          f"min gap {float(rec.min_gap):.3e}")
    report = {"slope": args.slope, "K": res.K, "L": res.L, "distinct": rec.distinct,
              "min_gap": str(rec.min_gap), "probes": []}
    for scale in (1000, 100, 10, 1):
        delta = rec.min_gap / scale
        probe = stability_probe(f, args.N, d, rec, delta, args.trials, args.cover_level, recheck=1)
        print(f"delta = min_gap/{scale}: preserved={probe.preserved} broken={probe.broken} "
              f"recheck={probe.rechecked}")
        report["probes"].append({"delta": str(delta), "preserved": probe.preserved,
                                 "broken": probe.broken, "rechecked": probe.rechecked})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)


if __name__ == "__main__":
    main()

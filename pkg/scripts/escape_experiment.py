"""Nested-ring escape search plus the passage-map relations on the same table."""

import argparse
import time

from windtree.billiard import Billiard, parse_direction
from windtree.config import build_nested_rings
from windtree.escape import RingLayout, escape_search, relations_check, sample_ring_points


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slope", default="2,3")
    ap.add_argument("--rings", default="2,4,6")
    ap.add_argument("--r", default="3/8")
    ap.add_argument("--shrink", default="1/20")
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--bound", type=int, default=3000)
    ap.add_argument("--verify-steps", type=int, default=10 ** 4)
    ap.add_argument("--samples", type=int, default=100)
    args = ap.parse_args()

    sizes = [int(x) for x in args.rings.split(",")]
    d, _ = parse_direction(args.slope)
    outer = max(sizes) + 2
    closed = build_nested_rings(sizes, args.r, args.shrink, outer=outer)
    open_ = build_nested_rings(sizes, args.r, args.shrink)

    b = Billiard(open_, d)
    lay = RingLayout(tuple(sizes))
    per = args.samples // lay.count + 1
    pts = [p for j in range(lay.count) for p in sample_ring_points(b, lay, j, per, seed=j)][:args.samples]
    rep = relations_check(b, lay, pts, args.bound)
    print(f"relations: {rep.checked} checked, {rep.skipped} undefined, {len(rep.violations)} violations")
    for name, n in sorted(rep.per_identity.items()):
        print(f"  {name}: {n}")

    t0 = time.perf_counter()
    rec = escape_search(closed, d, sizes, outer, 0, args.depth, args.bound, verify_config=open_,
                        verify_steps=args.verify_steps)
    print(f"escape search: depth {rec.depth}, intervals per level {[len(lv) for lv in rec.levels]}, "
          f"dropped {rec.dropped} ({time.perf_counter() - t0:.1f}s)")
    print(f"candidate {rec.candidate} stays out of annulus 0 for {rec.verified_no_return_steps} steps")
    for n, y, x in rec.pullback:
        print(f"  level {n}: first visit {y}, pulled back to {x}")


if __name__ == "__main__":
    main()

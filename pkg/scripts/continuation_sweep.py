"""Continue periodic orbits while one tree drifts sideways.

Seeds are the midpoints of the cylinder intervals of the unperturbed table;
for each shift the closing slope is recomputed and the largest shift
surviving for every seed is reported.
"""

import argparse
from fractions import Fraction

from windtree.billiard import PhasePoint, parse_direction
from windtree.config import Cell, TreeSpec, build_ringed
from windtree.extract import build_table
from windtree.periodic import WindowExceeded, continue_periodic, cylinder_decomposition


def main():
    ap = argparse.ArgumentParser(description="periodic continuation sweep")
    ap.add_argument("--slope", default="2,1")
    ap.add_argument("--cell", default="0,0")
    ap.add_argument("--steps", type=int, default=12)
    ap.add_argument("--max-shift", default="3/25")
    args = ap.parse_args()

    f = build_ringed(2, "1/4")
    table = build_table(f, 2)
    d, _ = parse_direction(args.slope)
    cell = Cell(*map(int, args.cell.split(",")))
    t = f.tree(cell)
    dec = cylinder_decomposition(table, d)
    seeds, seen = [], set()
    for (c, cls), (lo, hi), _, ci, _ in dec.intervals:
        if c in table.marked_trees and ci not in seen:
            seen.add(ci)
            seeds.append(PhasePoint(c, cls, (lo + hi) / 2))
    top = Fraction(args.max_shift)
    print(f"{len(seeds)} seeds from {len(dec.cylinders)} cylinders")
    for k in range(1, args.steps + 1):
        shift = top * k / args.steps
        g = f.replace({cell: TreeSpec(t.a + shift, t.b)})
        ok, slopes = 0, set()
        for x in seeds:
            try:
                res = continue_periodic(f, g, d, x)
                slopes.add(res.slope)
                ok += 1
            except WindowExceeded:
                pass
        print(f"shift {str(shift):>6}: {ok}/{len(seeds)} continued, {len(slopes)} distinct closing slopes")


if __name__ == "__main__":
    main()

"""Periodic directions and their cylinders on a rationally ringed table.

For every slope p/q with p, q <= --q-bound the cylinder decomposition is
computed; the slopes are then ordered by largest period and the 1/N density
threshold of the ordered list is reported.
"""

import argparse

from windtree.config import build_ringed
from windtree.extract import build_table
from windtree.periodic import cylinder_decomposition, density_threshold, periodic_directions


def main():
    ap = argparse.ArgumentParser(description="cylinder census")
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--r", default="1/4")
    ap.add_argument("--q-bound", type=int, default=4)
    ap.add_argument("--density", type=int, nargs="*", default=[1, 2, 3, 4])
    args = ap.parse_args()

    table = build_table(build_ringed(args.N, args.r), args.N)
    ordered = periodic_directions(table, args.q_bound)
    print(f"{'slope':>6} {'max period':>10} {'cylinders':>9} {'periods'}")
    for slope, period in ordered:
        dec = cylinder_decomposition(table, slope)
        periods = sorted({c.period for c in dec.cylinders})
        print(f"{str(slope):>6} {period:>10} {len(dec.cylinders):>9} {periods}")
    slopes = [s for s, _ in ordered]
    for N in args.density:
        print(f"1/{N}-density threshold: {density_threshold(slopes, N)}")


if __name__ == "__main__":
    main()

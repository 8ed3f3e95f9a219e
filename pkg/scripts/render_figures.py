"""SVG drawings: the ringed table, an orbit on it and the cylinders of a rational slope."""

import argparse
import os
from fractions import Fraction

from windtree.billiard import Direction, PhasePoint
from windtree.config import Cell, build_ringed
from windtree.exactnum import Scalar
from windtree.extract import build_table
from windtree.periodic import cylinder_decomposition
from windtree.render import cylinder_bands, orbit_points, render_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--N", type=int, default=2)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    g = build_ringed(args.N, "1/4")
    table = build_table(g, args.N)
    figures = {
        "ringed_table.svg": render_svg(g, args.N),
        "orbit_sqrt2.svg": render_svg(
            g, args.N, orbit_points(g, Direction(1, Scalar(0, 1, 2)), PhasePoint(Cell(0, 0), 0, Scalar(Fraction(1, 3))), 60)),
        "cylinders_slope2.svg": render_svg(g, args.N, bands=cylinder_bands(cylinder_decomposition(table, Fraction(2)))),
    }
    for name, svg in figures.items():
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(path)


if __name__ == "__main__":
    main()

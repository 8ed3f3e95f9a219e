"""Compile a ringed table and a direction into an interval exchange.

Every (tree, class) chart is cut into its free sub-arcs: the points from
which the class direction leaves into the open table.  Each sub-arc becomes
one component of the IET domain, laid out on the real line with unit gaps,
in the transversal measure coordinate.  Singular points are found by
shooting from every tree vertex: backwards to get the points whose flight
ends at a corner, forwards to get the points no flight reaches.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple

from .billiard import Billiard, Direction, InvalidStateError, PhasePoint, TrajectoryEvent
from .config import Cell, Configuration, cells_in_rhombus, is_ringed, rhombus_cells
from .exactnum import Scalar
from .iet import EligibleIET, find_connections

__all__ = [
    "Segment",
    "RingedTable",
    "ChartComponent",
    "ChartDictionary",
    "ExtractedIET",
    "build_table",
    "extract_iet",
    "exceptional_scan",
]


class Segment(NamedTuple):
    """Boundary segment on one side of one tree; ``side`` is left/right/bottom/top."""

    cell: Cell
    side: str
    p: tuple
    q: tuple


_SIDE_NORMALS = {"left": (-1, 0), "right": (1, 0), "bottom": (0, -1), "top": (0, 1)}


@dataclass
class RingedTable:
    config: Configuration
    N: int
    trees: list
    marked_trees: list
    boundary: list

    @property
    def marked_charts(self):
        return [(c, k) for c in self.marked_trees for k in range(4)]


def _side_points(bx, side):
    x1, x2, y1, y2 = bx
    return {
        "left": ((x1, y1), (x1, y2)),
        "right": ((x2, y1), (x2, y2)),
        "bottom": ((x1, y1), (x2, y1)),
        "top": ((x1, y2), (x2, y2)),
    }[side]


def _breaks_on_segment(b, p, q):
    """Parameters along the axis-parallel segment ``p -> q`` where freeness may change."""
    horizontal = p[1] == q[1]
    lo, hi = (p[0], q[0]) if horizontal else (p[1], q[1])
    fixed = p[1] if horizontal else p[0]
    vals = {lo, hi}
    mid = (lo + hi) / 2
    cx, cy = (mid, fixed) if horizontal else (fixed, mid)
    seen = set()
    for di in (-2, -1, 0, 1, 2):
        for dj in (-2, -1, 0, 1, 2):
            c = Cell(cx.floor() + di, cy.floor() + dj)
            if c in seen:
                continue
            seen.add(c)
            o = b.g.box(c)
            if o is None:
                continue
            x1, x2, y1, y2 = o
            cand = (x1, x2) if horizontal else (y1, y2)
            rng_lo, rng_hi = (y1, y2) if horizontal else (x1, x2)
            if rng_lo <= fixed <= rng_hi:
                for v in cand:
                    if lo < v < hi:
                        vals.add(v)
    if b.c_window is not None:
        rest = b.c_window - abs(fixed)
        for v in (rest, -rest):
            if lo < v < hi:
                vals.add(v)
    return sorted(vals)


def _free_runs(b, p, q, u):
    """Maximal open sub-segments of ``p -> q`` whose points are free along ``u``.

    Returns parameter pairs; a breakpoint that is itself free joins its neighbours.
    """
    horizontal = p[1] == q[1]
    fixed = p[1] if horizontal else p[0]

    def pt(t):
        return (t, fixed) if horizontal else (fixed, t)

    vals = _breaks_on_segment(b, p, q)
    runs = []
    cur = None
    for a, c in zip(vals, vals[1:]):
        m = (a + c) / 2
        free = b.is_free(*pt(m), *u)
        if free:
            if cur is not None and cur[1] == a and b.is_free(*pt(a), *u) and not b.is_corner(*pt(a)):
                cur = (cur[0], c)
            else:
                if cur is not None:
                    runs.append(cur)
                cur = (a, c)
        else:
            if cur is not None:
                runs.append(cur)
            cur = None
    if cur is not None:
        runs.append(cur)
    return runs


def build_table(g, N):
    """Free boundary of the table ``g`` clipped to the rhombus of size ``N``."""
    if not is_ringed(g, N):
        raise ValueError(f"configuration is not {N}-ringed")
    b = Billiard(g, Direction(1, 1), window=N)
    trees = [c for c in rhombus_cells(N) if g.box(c) is not None]
    marked = [c for c in cells_in_rhombus(N) if g.box(c) is not None]
    segs = []
    for c in trees:
        bx = g.box(c)
        for side in ("left", "right", "bottom", "top"):
            p, q = _side_points(bx, side)
            horizontal = side in ("bottom", "top")
            for a, e in _free_runs(b, p, q, _SIDE_NORMALS[side]):
                if horizontal:
                    segs.append(Segment(c, side, (a, p[1]), (e, p[1])))
                else:
                    segs.append(Segment(c, side, (p[0], a), (p[0], e)))
    return RingedTable(g, N, trees, marked, segs)


# -- chart dictionary ------------------------------------------------------------

class ChartComponent(NamedTuple):
    cell: Cell
    cls: int
    s_lo: Scalar
    s_hi: Scalar
    offset: Scalar
    length: Scalar
    marked: bool


class ChartDictionary:
    """Conversion between phase points and the IET coordinate."""

    def __init__(self, billiard, components):
        self.b = billiard
        self.components = list(components)
        self._offsets = [c.offset for c in self.components]
        self._by_chart = {}
        for k, c in enumerate(self.components):
            self._by_chart.setdefault((c.cell, c.cls), []).append(k)

    def interval(self, k):
        c = self.components[k]
        return (c.offset, c.offset + c.length)

    def marked_intervals(self):
        return [self.interval(k) for k, c in enumerate(self.components) if c.marked]

    def to_u(self, pp):
        """IET coordinate of a phase point, or ``None`` outside the domain."""
        for k in self._by_chart.get((pp.cell, pp.cls), ()):
            c = self.components[k]
            if c.s_lo < pp.s < c.s_hi:
                return c.offset + self.b.mu(pp.s) - self.b.mu(c.s_lo)
        return None

    def component_of(self, u):
        k = bisect_right(self._offsets, u) - 1
        if k < 0:
            return None
        c = self.components[k]
        if c.offset < u < c.offset + c.length:
            return k
        return None

    def to_phase(self, u):
        k = self.component_of(u)
        if k is None:
            raise ValueError(f"{u} not in domain")
        c = self.components[k]
        s = self.b.mu_inverse(u - c.offset + self.b.mu(c.s_lo))
        return PhasePoint(c.cell, c.cls, s)

    def s_interval_to_u(self, cell, cls, lo, hi):
        """Pieces of the chart interval ``(lo, hi)`` in IET coordinates."""
        out = []
        for k in self._by_chart.get((cell, cls), ()):
            c = self.components[k]
            a = lo if lo > c.s_lo else c.s_lo
            e = hi if hi < c.s_hi else c.s_hi
            if a < e:
                base = c.offset - self.b.mu(c.s_lo)
                out.append((base + self.b.mu(a), base + self.b.mu(e)))
        return out

    def locate(self, x, y, cls):
        """IET coordinate of the cartesian point ``(x, y)`` with class ``cls``."""
        for cell, _ in self.b.nearby_boxes(x, y):
            if (cell, cls) not in self._by_chart:
                continue
            s = self.b.chart_coordinate(cell, cls, x, y)
            if s is None:
                continue
            u = self.to_u(PhasePoint(cell, cls, s))
            if u is not None:
                return u
        return None

    def to_json(self):
        return [
            {
                "cell": [c.cell.i, c.cell.j],
                "class": c.cls,
                "s_lo": str(c.s_lo),
                "s_hi": str(c.s_hi),
                "offset": str(c.offset),
                "length": str(c.length),
                "marked": c.marked,
            }
            for c in self.components
        ]


@dataclass
class ExtractedIET:
    iet: EligibleIET
    charts: ChartDictionary
    table: RingedTable
    direction: Direction
    forward_labels: dict = field(default_factory=dict)
    backward_labels: dict = field(default_factory=dict)

    @property
    def billiard(self):
        return self.charts.b

    def to_json(self):
        from .iet import iet_to_json

        return iet_to_json(
            self.iet,
            {"direction": [str(self.direction.dx), str(self.direction.dy)],
             "N": self.table.N,
             "charts": self.charts.to_json()},
        )


def _chart_components(b, cell, cls):
    """Free sub-arcs ``(s_lo, s_hi)`` of one chart."""
    v = b.dir.vector(cls)
    two_r = b.two_r
    out = []
    for s0, s1 in ((Scalar(0), two_r), (two_r, b.four_r)):
        (p, _), (q, _) = b.chart_point(PhasePoint(cell, cls, s0)), b.chart_point(PhasePoint(cell, cls, s1))
        horizontal = p[1] == q[1]
        if horizontal:
            flip = p[0] > q[0]
        else:
            flip = p[1] > q[1]
        a, e = (q, p) if flip else (p, q)
        for lo, hi in _free_runs(b, a, e, v):
            pl = (lo, a[1]) if horizontal else (a[0], lo)
            ph = (hi, a[1]) if horizontal else (a[0], hi)
            sl = b.chart_coordinate(cell, cls, *pl)
            sh = b.chart_coordinate(cell, cls, *ph)
            if sl > sh:
                sl, sh = sh, sl
            out.append([sl, sh])
    out.sort()
    merged = []
    for sl, sh in out:
        if merged and merged[-1][1] == sl:
            (x, y), _ = b.chart_point(PhasePoint(cell, cls, sl))
            if b.is_free(x, y, *v):
                merged[-1][1] = sh
                continue
        merged.append([sl, sh])
    return [tuple(m) for m in merged]


def _vertices(g, cells):
    """Distinct tree vertices with a stable label ``(cell, corner name)``."""
    pts = {}
    for c in cells:
        x1, x2, y1, y2 = g.box(c)
        for name, q in (("bl", (x1, y1)), ("tl", (x1, y2)), ("br", (x2, y1)), ("tr", (x2, y2))):
            pts.setdefault(q, (c, name))
    return sorted(pts.items())


def extract_iet(table, direction):
    """IET of the billiard map on the table's phase space, in measure coordinates."""
    if isinstance(direction, tuple):
        direction = Direction(*direction)
    if direction.axis_parallel:
        raise ValueError("degenerate direction")
    b = Billiard(table.config, direction, window=table.N)
    marked = set(table.marked_trees)
    comps, offset = [], Scalar(0)
    for cell in table.trees:
        for cls in range(4):
            for sl, sh in _chart_components(b, cell, cls):
                length = b.mu(sh) - b.mu(sl)
                comps.append(ChartComponent(cell, cls, sl, sh, offset, length, cell in marked))
                offset = offset + length + 1
    charts = ChartDictionary(b, comps)

    fwd, bwd = {}, {}
    for k, c in enumerate(comps):
        if c.s_lo < b.two_r < c.s_hi:
            u = c.offset + b.mu(b.two_r) - b.mu(c.s_lo)
            bwd[u] = ((c.cell, "mid"), c.cls)
    for q, label in _vertices(table.config, table.trees):
        for cls in range(4):
            vx, vy = direction.vector(cls)
            if b.is_free(q[0], q[1], -vx, -vy):
                hit = b.next_collision(q, (-vx, -vy))
                if hit.cell is not None:
                    u = charts.locate(hit.point[0], hit.point[1], cls)
                    if u is not None:
                        fwd.setdefault(u, (label, cls))
            if b.is_free(q[0], q[1], vx, vy) and charts.locate(q[0], q[1], cls) is None:
                hit = b.next_collision(q, (vx, vy))
                if hit.cell is not None and not hit.corner:
                    c2 = _reflect(cls, hit.side)
                    u = charts.locate(hit.point[0], hit.point[1], c2)
                    if u is not None:
                        bwd.setdefault(u, (label, cls))

    cuts = sorted(fwd)
    pieces = []
    j = 0
    for k, c in enumerate(comps):
        lo, hi = c.offset, c.offset + c.length
        pts = [lo]
        while j < len(cuts) and cuts[j] < hi:
            if cuts[j] > lo:
                pts.append(cuts[j])
            j += 1
        pts.append(hi)
        for a, e in zip(pts, pts[1:]):
            m = (a + e) / 2
            nxt = b.step(charts.to_phase(m))
            if isinstance(nxt, TrajectoryEvent):
                raise RuntimeError(f"flight from a regular point stopped: {nxt.kind}")
            um = charts.to_u(nxt)
            if um is None:
                raise RuntimeError("flight landed outside the phase space")
            pieces.append((a, e, um - m))
    T = EligibleIET([charts.interval(k) for k in range(len(comps))], pieces)
    return ExtractedIET(T, charts, table, direction, fwd, bwd)


def _reflect(cls, side):
    from .billiard import flip_class

    return flip_class(cls, side)


def exceptional_scan(table, direction, max_steps):
    """Saddle connections of the extracted IET (corner-to-corner billiard orbits)."""
    ex = extract_iet(table, direction)
    return find_connections(ex.iet, max_steps)

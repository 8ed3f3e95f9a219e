"""The directional billiard map on wind-tree tables.

A direction is stored as ``(dx, dy)`` with ``dx, dy >= 0``; the four
directions reachable by reflections are the sign patterns

    class 0: (+dx, +dy)   class 1: (-dx, -dy)
    class 2: (-dx, +dy)   class 3: (+dx, -dy)

For a tree and a class, the *chart* is the pair of sides from which the
class points away from the tree: the horizontal side first, then the
vertical one, joined at a shared corner.  Arc length ``s`` runs over
``[0, 4r]`` with the shared corner at ``s = 2r``; classes 0 and 1 run
clockwise around the tree and classes 2 and 3 counterclockwise.  With this
orientation the transversal measure (density ``dy`` on horizontal sides and
``dx`` on vertical ones) turns the billiard map into a translation.

Flights are traced by walking the unit-cell grid; a hit is a corner stop as
soon as it lands on a vertex of any tree, including flat contacts where two
trees meet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .config import Cell, Configuration
from .exactnum import Scalar, as_scalar, parse_scalar

__all__ = [
    "CLASS_SIGNS",
    "Direction",
    "PhasePoint",
    "Collision",
    "TrajectoryEvent",
    "InvalidStateError",
    "Billiard",
    "parse_direction",
    "flip_class",
    "reverse_class",
    "measure_density",
    "chart",
    "chart_inverse",
    "next_collision",
    "step",
    "orbit",
    "events_to_jsonl",
]

CLASS_SIGNS = ((1, 1), (-1, -1), (-1, 1), (1, -1))
_FLIP_X = (2, 3, 0, 1)
_FLIP_Y = (3, 2, 1, 0)
_REVERSE = (1, 0, 3, 2)


def flip_class(c, side_kind):
    """Class after reflecting off a vertical (``"V"``) or horizontal side."""
    return _FLIP_X[c] if side_kind == "V" else _FLIP_Y[c]


def reverse_class(c):
    return _REVERSE[c]


class InvalidStateError(ValueError):
    """The flight starts inside a tree or immediately enters one."""

    def __init__(self, msg="invalid state"):
        super().__init__(msg)


@dataclass(frozen=True)
class Direction:
    """Base direction ``(dx, dy)`` with non-negative entries, not both zero."""

    dx: Scalar
    dy: Scalar

    def __post_init__(self):
        dx, dy = abs(as_scalar(self.dx)), abs(as_scalar(self.dy))
        if not dx and not dy:
            raise ValueError("zero direction")
        if dx.is_rational() and dy.is_rational():
            from math import gcd

            fx, fy = dx.to_fraction(), dy.to_fraction()
            den = fx.denominator * fy.denominator // gcd(fx.denominator, fy.denominator)
            nx, ny = int(fx * den), int(fy * den)
            k = gcd(nx, ny)
            dx, dy = Scalar(nx // k), Scalar(ny // k)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

    def vector(self, c):
        ex, ey = CLASS_SIGNS[c]
        return (self.dx if ex > 0 else -self.dx, self.dy if ey > 0 else -self.dy)

    @property
    def axis_parallel(self):
        return not self.dx or not self.dy

    @property
    def radicand(self):
        return self.dx.d or self.dy.d

    def __str__(self):
        return f"({self.dx}, {self.dy})"


def parse_direction(text):
    """``"dx,dy"`` or a single slope ``m`` meaning ``(1, m)``.

    Returns ``(Direction, class)`` so that a negative slope starts in class 3.
    """
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    if "," in text:
        sx, sy = text.split(",", 1)
        x, y = parse_scalar(sx), parse_scalar(sy)
    else:
        x, y = Scalar(1), parse_scalar(text)
    ex = 1 if x.sign() >= 0 else -1
    ey = 1 if y.sign() >= 0 else -1
    return Direction(x, y), CLASS_SIGNS.index((ex, ey))


class PhasePoint(NamedTuple):
    """Point of phase space: tree cell, direction class, chart arc length."""

    cell: Cell
    cls: int
    s: Scalar


class Collision(NamedTuple):
    t: Scalar
    point: tuple
    cell: Optional[Cell]
    side: Optional[str]  # "V" or "H"
    corner: bool


class TrajectoryEvent(NamedTuple):
    kind: str  # collision | corner_stop | left_window | periodic_close
    at: object  # PhasePoint or cartesian pair
    step_index: int


def measure_density(direction, side_kind):
    """Transversal density in arc length: ``dx`` on vertical, ``dy`` on horizontal sides."""
    return direction.dx if side_kind == "V" else direction.dy


class Billiard:
    """Billiard map of configuration ``g`` in a fixed direction.

    ``window`` (an integer ``N``) restricts flights to the closed rhombus
    ``|x|+|y| <= N + 1/2``; leaving it ends the orbit.
    """

    def __init__(self, g: Configuration, direction: Direction, window=None, max_cells=200000):
        self.g = g
        self.dir = direction
        self.window = window
        self.r = g.r
        self.two_r = 2 * g.r
        self.four_r = 4 * g.r
        self.max_cells = max_cells
        self._cand = {}
        self._charts = {}
        self.c_window = Scalar(2 * window + 1) / 2 if window is not None else None

    # -- geometry helpers ---------------------------------------------------
    def box(self, cell):
        return self.g.box(cell)

    def _candidates(self, i, j):
        key = (i, j)
        out = self._cand.get(key)
        if out is None:
            out = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    c = Cell(i + di, j + dj)
                    bx = self.g.box(c)
                    if bx is None:
                        continue
                    if di == 0 and dj == 0:
                        out.append((c, bx))
                    elif bx[0] <= i + 1 and bx[1] >= i and bx[2] <= j + 1 and bx[3] >= j:
                        out.append((c, bx))
            self._cand[key] = out
        return out

    def nearby_boxes(self, x, y):
        i, j = x.floor(), y.floor()
        seen = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                c = Cell(i + di, j + dj)
                bx = self.g.box(c)
                if bx is not None:
                    seen.append((c, bx))
        return seen

    @staticmethod
    def _on_boundary(bx, x, y):
        x1, x2, y1, y2 = bx
        onv = (x == x1 or x == x2) and y1 <= y <= y2
        onh = (y == y1 or y == y2) and x1 <= x <= x2
        if onv and onh:
            return "C"
        if onv:
            return "V"
        if onh:
            return "H"
        return None

    def is_corner(self, x, y):
        """``(x, y)`` is a vertex of a tree or where two trees' sides meet at a right angle."""
        kinds = set()
        for _, bx in self.nearby_boxes(x, y):
            k = self._on_boundary(bx, x, y)
            if k:
                kinds.add(k)
        return "C" in kinds or ("V" in kinds and "H" in kinds)

    def corners_at(self, x, y):
        return [c for c, bx in self.nearby_boxes(x, y) if self._on_boundary(bx, x, y) == "C"]

    def inside_window(self, x, y, ux=None, uy=None):
        """Open-rhombus membership, infinitesimally along ``(ux, uy)`` if given."""
        if self.c_window is None:
            return True
        f = abs(x) + abs(y)
        if f < self.c_window:
            return True
        if f > self.c_window or ux is None:
            return False
        rate = Scalar(0)
        for q, u in ((x, ux), (y, uy)):
            sq = q.sign()
            rate = rate + (u if sq > 0 else -u if sq < 0 else abs(u))
        return rate < 0

    def is_free(self, x, y, ux, uy):
        """Moving from ``(x, y)`` along ``(ux, uy)`` stays out of every open tree."""
        for _, bx in self.nearby_boxes(x, y):
            x1, x2, y1, y2 = bx
            inx = (x1 < x < x2) or (x == x1 and ux > 0) or (x == x2 and ux < 0)
            if not inx:
                continue
            iny = (y1 < y < y2) or (y == y1 and uy > 0) or (y == y2 and uy < 0)
            if iny:
                return False
        return self.inside_window(x, y, ux, uy)

    # -- charts -------------------------------------------------------------
    def _chart(self, cell, c):
        key = (cell, c)
        ch = self._charts.get(key)
        if ch is None:
            bx = self.g.box(cell)
            if bx is None:
                raise ValueError(f"cell {tuple(cell)} has no tree")
            x1, x2, y1, y2 = bx
            ex, ey = CLASS_SIGNS[c]
            xv = x2 if ex > 0 else x1
            yh = y2 if ey > 0 else y1
            ch = (xv, yh, ex, ey)
            self._charts[key] = ch
        return ch

    def chart_point(self, pp):
        """Cartesian point and side kind of a phase point."""
        xv, yh, ex, ey = self._chart(pp.cell, pp.cls)
        s = pp.s
        if s < 0 or s > self.four_r:
            raise ValueError(f"chart coordinate {s} outside [0, 4r]")
        if s <= self.two_r:
            x = xv - (self.two_r - s) if ex > 0 else xv + (self.two_r - s)
            return (x, yh), ("C" if s == self.two_r else "H")
        d = s - self.two_r
        y = yh - d if ey > 0 else yh + d
        return (xv, y), "V"

    def chart_coordinate(self, cell, c, x, y):
        """Arc length of ``(x, y)`` on the chart of ``(cell, c)``, or ``None``."""
        xv, yh, ex, ey = self._chart(cell, c)
        bx = self.g.box(cell)
        if y == yh and bx[0] <= x <= bx[1]:
            return self.two_r - (xv - x) if ex > 0 else self.two_r - (x - xv)
        if x == xv and bx[2] <= y <= bx[3]:
            return self.two_r + (yh - y) if ey > 0 else self.two_r + (y - yh)
        return None

    def side_of(self, pp):
        if pp.s < self.two_r:
            return "H"
        if pp.s > self.two_r:
            return "V"
        return "C"

    def mu(self, s):
        """Transversal measure of the chart arc ``[0, s]``."""
        if s <= self.two_r:
            return self.dir.dy * s
        return self.dir.dy * self.two_r + self.dir.dx * (s - self.two_r)

    def mu_inverse(self, m):
        first = self.dir.dy * self.two_r
        if m <= first and self.dir.dy:
            return m / self.dir.dy
        return self.two_r + (m - first) / self.dir.dx

    # -- flight -------------------------------------------------------------
    def _window_exit(self, px, py, vx, vy):
        if self.c_window is None:
            return None
        best = None
        for s1 in (1, -1):
            for s2 in (1, -1):
                rate = vx * s1 + vy * s2
                if rate.sign() > 0:
                    t = (self.c_window - (px * s1 + py * s2)) / rate
                    if best is None or t < best:
                        best = t
        return best

    @staticmethod
    def _entry(bx, px, py, vx, vy, ivx, ivy):
        """Entry time of the ray into a closed box (``None`` if missed or behind)."""
        x1, x2, y1, y2 = bx
        sx, sy = vx.sign(), vy.sign()
        if sx > 0:
            txa, txb = (x1 - px) * ivx, (x2 - px) * ivx
        elif sx < 0:
            txa, txb = (x2 - px) * ivx, (x1 - px) * ivx
        else:
            if px < x1 or px > x2:
                return None
            txa = txb = None
        if sy > 0:
            tya, tyb = (y1 - py) * ivy, (y2 - py) * ivy
        elif sy < 0:
            tya, tyb = (y2 - py) * ivy, (y1 - py) * ivy
        else:
            if py < y1 or py > y2:
                return None
            tya = tyb = None
        if txa is None:
            tin, tout, kind = tya, tyb, "H"
        elif tya is None:
            tin, tout, kind = txa, txb, "V"
        else:
            if txa > tya:
                tin, kind = txa, "V"
            elif tya > txa:
                tin, kind = tya, "H"
            else:
                tin, kind = txa, "C"
            tout = txb if txb < tyb else tyb
        if tin > tout or tout.sign() <= 0:
            return None
        if tin.sign() <= 0:
            raise InvalidStateError("invalid state: flight enters a tree")
        return tin, kind

    def next_collision(self, P, v):
        """First boundary point hit by ``P + t v``, ``t > 0``.

        Returns a ``Collision``; ``cell is None`` signals that the ray left
        the window first.
        """
        px, py = as_scalar(P[0]), as_scalar(P[1])
        vx, vy = as_scalar(v[0]), as_scalar(v[1])
        sx, sy = vx.sign(), vy.sign()
        if sx == 0 and sy == 0:
            raise ValueError("zero direction")
        ivx = 1 / vx if sx else None
        ivy = 1 / vy if sy else None
        t_win = self._window_exit(px, py, vx, vy)
        if t_win is not None and t_win.sign() <= 0:
            return Collision(Scalar(0), (px, py), None, None, False)
        i = px.floor()
        if sx < 0 and px == i:
            i -= 1
        j = py.floor()
        if sy < 0 and py == j:
            j -= 1
        for _ in range(self.max_cells):
            if sx > 0:
                tx = (i + 1 - px) * ivx
            elif sx < 0:
                tx = (i - px) * ivx
            else:
                tx = None
            if sy > 0:
                ty = (j + 1 - py) * ivy
            elif sy < 0:
                ty = (j - py) * ivy
            else:
                ty = None
            if tx is None:
                t_exit = ty
            elif ty is None:
                t_exit = tx
            else:
                t_exit = tx if tx < ty else ty
            best = None
            for cell, bx in self._candidates(i, j):
                hit = self._entry(bx, px, py, vx, vy, ivx, ivy)
                if hit is None:
                    continue
                th, kind = hit
                if th <= t_exit and (best is None or th < best[0]):
                    best = (th, cell, kind)
            if best is not None:
                th, cell, kind = best
                if t_win is not None and th > t_win:
                    return Collision(t_win, (px + t_win * vx, py + t_win * vy), None, None, False)
                hx, hy = px + th * vx, py + th * vy
                corner = kind == "C" or self.is_corner(hx, hy)
                return Collision(th, (hx, hy), cell, kind if kind != "C" else None, corner)
            if t_win is not None and t_exit > t_win:
                return Collision(t_win, (px + t_win * vx, py + t_win * vy), None, None, False)
            if tx is not None and (ty is None or tx < ty):
                i += sx
            elif ty is not None and (tx is None or ty < tx):
                j += sy
            else:
                i += sx
                j += sy
        raise RuntimeError("flight exceeded the cell budget without a collision")

    # -- the map ------------------------------------------------------------
    def step(self, pp, backward=False):
        """One iteration of the map (or its inverse).

        Returns the next ``PhasePoint``, or a ``TrajectoryEvent`` with
        ``step_index`` 0 when the orbit stops.
        """
        (x, y), side = self.chart_point(pp)
        if not backward:
            vx, vy = self.dir.vector(pp.cls)
            if not self.is_free(x, y, vx, vy):
                raise InvalidStateError("invalid state: direction points into a tree")
            hit = self.next_collision((x, y), (vx, vy))
            if hit.cell is None:
                return TrajectoryEvent("left_window", hit.point, 0)
            if hit.corner:
                return TrajectoryEvent("corner_stop", hit.point, 0)
            c2 = flip_class(pp.cls, hit.side)
            s2 = self.chart_coordinate(hit.cell, c2, *hit.point)
            return PhasePoint(hit.cell, c2, s2)
        if side == "C" or pp.s == 0 or pp.s == self.four_r or self.is_corner(x, y):
            return TrajectoryEvent("corner_stop", (x, y), 0)
        c_in = flip_class(pp.cls, side)
        vx, vy = self.dir.vector(c_in)
        hit = self.next_collision((x, y), (-vx, -vy))
        if hit.cell is None:
            return TrajectoryEvent("left_window", hit.point, 0)
        if hit.corner:
            return TrajectoryEvent("corner_stop", hit.point, 0)
        s2 = self.chart_coordinate(hit.cell, c_in, *hit.point)
        return PhasePoint(hit.cell, c_in, s2)

    def orbit(self, pp, max_steps, stop_sets=(), backward=False):
        """Iterate from ``pp`` and record events (see ``TrajectoryEvent``)."""
        events = []
        cur = pp
        for k in range(1, max_steps + 1):
            nxt = self.step(cur, backward=backward)
            if isinstance(nxt, TrajectoryEvent):
                events.append(TrajectoryEvent(nxt.kind, nxt.at, k))
                return events
            if nxt == pp:
                events.append(TrajectoryEvent("periodic_close", nxt, k))
                return events
            events.append(TrajectoryEvent("collision", nxt, k))
            if any(stop(nxt) for stop in stop_sets):
                return events
            cur = nxt
        return events

    def iterate(self, pp, n, backward=False):
        """``T^n(pp)`` or ``None`` if the orbit stops first."""
        cur = pp
        for _ in range(n):
            cur = self.step(cur, backward=backward)
            if isinstance(cur, TrajectoryEvent):
                return None
        return cur


# -- functional front-end ------------------------------------------------------

def chart(g, cell, c, s, direction=None):
    """Cartesian point and side tag of chart coordinate ``s``."""
    b = Billiard(g, direction or Direction(1, 1))
    return b.chart_point(PhasePoint(Cell(*cell), c, as_scalar(s)))


def chart_inverse(g, cell, c, point, direction=None):
    b = Billiard(g, direction or Direction(1, 1))
    return b.chart_coordinate(Cell(*cell), c, as_scalar(point[0]), as_scalar(point[1]))


def next_collision(g, start, v, window=None):
    """Event for the first hit of the ray ``start + t v``."""
    b = Billiard(g, Direction(1, 1), window)
    hit = b.next_collision(start, v)
    if hit.cell is None:
        return TrajectoryEvent("left_window", hit.point, 0)
    if hit.corner:
        return TrajectoryEvent("corner_stop", hit.point, 0)
    return TrajectoryEvent("collision", hit, 0)


def step(g, direction, pp, window=None, backward=False):
    return Billiard(g, direction, window).step(pp, backward=backward)


def orbit(g, direction, pp, max_steps, stop_sets=(), window=None):
    return Billiard(g, direction, window).orbit(pp, max_steps, stop_sets)


def events_to_jsonl(events):
    """One JSON object per event with exact scalar strings."""
    lines = []
    for ev in events:
        rec = {"kind": ev.kind, "step": ev.step_index}
        if isinstance(ev.at, PhasePoint):
            rec["cell"] = [ev.at.cell.i, ev.at.cell.j]
            rec["class"] = ev.at.cls
            rec["s"] = str(ev.at.s)
        else:
            rec["point"] = [str(ev.at[0]), str(ev.at[1])]
        lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")

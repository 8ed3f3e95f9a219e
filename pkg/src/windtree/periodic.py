"""Periodic orbits: direction windows, continuation, cylinders.

Slopes are measured against the side the base point sits on: for a
vertical base side the parameter is ``m = dy/dx``, for a horizontal one
``m = dx/dy``.  With this choice the point where the unfolded ray meets a
fixed unfolded side moves affinely in ``m`` whenever that side is parallel
to the base side, which is the case for the return of a periodic orbit.

Unfolding keeps the ray straight and reflects the table instead; a frame
is the map ``(x, y) -> (sx*x + bx, sy*y + by)`` sending real coordinates to
unfolded ones.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import mpmath

from .billiard import CLASS_SIGNS, Billiard, Direction, PhasePoint, TrajectoryEvent
from .config import Cell
from .exactnum import Scalar, as_scalar
from .extract import extract_iet

__all__ = [
    "DirectionWindow",
    "Cylinder",
    "CylinderDecomposition",
    "ContinuationResult",
    "itinerary",
    "direction_window",
    "continue_periodic",
    "periodic_directions",
    "density_threshold",
    "cylinder_decomposition",
    "robust_core",
    "direction_for",
    "slope_parameter",
]


class WindowExceeded(ValueError):
    def __init__(self, msg="window exceeded"):
        super().__init__(msg)


def itinerary(b, x, p):
    """Sides hit during ``p`` steps: list of ``(cell, side kind, class after reflection)``."""
    out = []
    cur = x
    for k in range(1, p + 1):
        nxt = b.step(cur)
        if isinstance(nxt, TrajectoryEvent):
            raise ValueError(f"orbit stops ({nxt.kind}) at step {k}")
        out.append((nxt.cell, b.side_of(nxt), nxt.cls))
        cur = nxt
    return out


def _side_segment(g, cell, kind, cls):
    x1, x2, y1, y2 = g.box(cell)
    ex, ey = CLASS_SIGNS[cls]
    if kind == "V":
        x = x2 if ex > 0 else x1
        return ((x, y1), (x, y2))
    y = y2 if ey > 0 else y1
    return ((x1, y), (x2, y))


def slope_parameter(direction, base_kind):
    """``m`` of the base direction (always positive)."""
    return direction.dy / direction.dx if base_kind == "V" else direction.dx / direction.dy


def direction_for(m, base_kind, base_cls):
    """Direction and class for parameter ``m`` relative to the base class."""
    ex, ey = CLASS_SIGNS[base_cls]
    m = as_scalar(m)
    if not m:
        raise ValueError("axis-parallel direction")
    sm = 1 if m > 0 else -1
    if base_kind == "V":
        d, signs = Direction(1, abs(m)), (ex, ey * sm)
    else:
        d, signs = Direction(abs(m), 1), (ex * sm, ey)
    return d, CLASS_SIGNS.index(signs)


class _Frames:
    """Unfolding frames along an itinerary."""

    def __init__(self, g, itin):
        self.frames = [((1, 1), (Scalar(0), Scalar(0)))]
        for cell, kind, cls in itin:
            (sx, sy), (bx, by) = self.frames[-1]
            (p, q) = _side_segment(g, cell, kind, cls)
            if kind == "V":
                X = p[0]
                self.frames.append(((-sx, sy), (bx + 2 * sx * X, by)))
            else:
                Y = p[1]
                self.frames.append(((sx, -sy), (bx, by + 2 * sy * Y)))

    @staticmethod
    def apply(frame, P):
        (sx, sy), (bx, by) = frame
        return (P[0] * sx + bx, P[1] * sy + by)

    @staticmethod
    def inverse(frame, U):
        (sx, sy), (bx, by) = frame
        return ((U[0] - bx) * sx, (U[1] - by) * sy)


@dataclass
class DirectionWindow:
    base: PhasePoint
    direction: Direction
    p: int
    slope_interval: tuple  # (lo, hi) in the base parameter; None means unbounded
    landing_interval: tuple
    base_kind: str
    itinerary: list = field(default_factory=list)

    def contains(self, m):
        lo, hi = self.slope_interval
        return (lo is None or m > lo) and (hi is None or m < hi)


def _m_of(E, P0, base_kind, base_cls):
    ex, ey = CLASS_SIGNS[base_cls]
    dx, dy = E[0] - P0[0], E[1] - P0[1]
    if base_kind == "V":
        if (dx * ex).sign() <= 0:
            return None
        return dy * ey / (dx * ex)
    if (dy * ey).sign() <= 0:
        return None
    return dx * ex / (dy * ey)


def _same_itinerary(g, x, p, m, base_kind, ref):
    try:
        d, c = direction_for(m, base_kind, x.cls)
    except ValueError:
        return False
    b = Billiard(g, d)
    try:
        it = itinerary(b, PhasePoint(x.cell, c, x.s), p)
    except ValueError:
        return False
    return [(a, k) for a, k, _ in it] == [(a, k) for a, k, _ in ref]


def _landing(g, frames, itin, P0, m, base_kind, base_cls):
    """Chart coordinate where the unfolded ray of parameter ``m`` meets the last side."""
    if m is None:
        return None
    ex, ey = CLASS_SIGNS[base_cls]
    v = (Scalar(ex), ey * m) if base_kind == "V" else (ex * m, Scalar(ey))
    cell, kind, cls = itin[-1]
    p, q = _side_segment(g, cell, kind, cls)
    fr = frames.frames[len(itin) - 1]
    U1, U2 = _Frames.apply(fr, p), _Frames.apply(fr, q)
    if U1[0] == U2[0]:
        if not v[0]:
            return None
        t = (U1[0] - P0[0]) / v[0]
    else:
        if not v[1]:
            return None
        t = (U1[1] - P0[1]) / v[1]
    U = (P0[0] + t * v[0], P0[1] + t * v[1])
    R = _Frames.inverse(fr, U)
    b = Billiard(g, Direction(1, 1))
    x1, x2, y1, y2 = g.box(cell)
    if kind == "V":
        y = min(max(R[1], y1), y2)
        return b.chart_coordinate(cell, cls, R[0], y) if y == R[1] else None
    x = min(max(R[0], x1), x2)
    return b.chart_coordinate(cell, cls, x, R[1]) if x == R[0] else None


def direction_window(g, direction, x, p):
    """Maximal open interval of slope parameters keeping the ``p``-step itinerary."""
    b = Billiard(g, direction)
    base_kind = b.side_of(x)
    if base_kind == "C":
        raise ValueError("base point is a corner")
    if p == 0:
        return DirectionWindow(x, direction, 0, (None, None), (None, None), base_kind, [])
    ref = itinerary(b, x, p)
    m0 = slope_parameter(direction, base_kind)
    P0, _ = b.chart_point(x)
    frames = _Frames(g, ref)
    sides = [(x.cell, base_kind, x.cls)] + ref
    cands = set()
    for k in range(1, p + 1):
        s1 = _side_segment(g, *sides[k - 1])
        s2 = _side_segment(g, *sides[k])
        xs = [s1[0][0], s1[1][0], s2[0][0], s2[1][0]]
        ys = [s1[0][1], s1[1][1], s2[0][1], s2[1][1]]
        lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
        fr = frames.frames[k - 1]
        for i in range(lo_x.floor() - 1, hi_x.floor() + 2):
            for j in range(lo_y.floor() - 1, hi_y.floor() + 2):
                bx = g.box(Cell(i, j))
                if bx is None:
                    continue
                x1, x2, y1, y2 = bx
                if x2 < lo_x or x1 > hi_x or y2 < lo_y or y1 > hi_y:
                    continue
                for V in ((x1, y1), (x1, y2), (x2, y1), (x2, y2)):
                    m = _m_of(_Frames.apply(fr, V), P0, base_kind, x.cls)
                    if m is not None and m > 0 and m != m0:
                        cands.add(m)
    lo = Scalar(0)
    for m in sorted((m for m in cands if m < m0), reverse=True):
        if not _same_itinerary(g, x, p, m, base_kind, ref):
            lo = m
            break
    hi = None
    for m in sorted(m for m in cands if m > m0):
        if not _same_itinerary(g, x, p, m, base_kind, ref):
            hi = m
            break
    land = (_landing(g, frames, ref, P0, lo, base_kind, x.cls),
            _landing(g, frames, ref, P0, hi, base_kind, x.cls))
    return DirectionWindow(x, direction, p, (lo, hi), land, base_kind, ref)


@dataclass
class ContinuationResult:
    direction: Direction
    cls: int
    slope: Scalar
    period: int
    original_period: int


def first_period(b, x, bound):
    cur = x
    for k in range(1, bound + 1):
        cur = b.step(cur)
        if isinstance(cur, TrajectoryEvent):
            return None
        if cur == x:
            return k
    return None


def continue_periodic(f, g, direction, x, bound=10 ** 4):
    """Slope for which the base point of a periodic orbit of ``f`` closes up in ``g``
    along the same sequence of sides."""
    bf = Billiard(f, direction)
    p = first_period(bf, x, bound)
    if p is None:
        raise ValueError("base point is not periodic within the bound")
    itin = itinerary(bf, x, p)
    base_kind = bf.side_of(x)
    frames = _Frames(g, itin)
    (sx, sy), (tx, ty) = frames.frames[-1]
    if sx != 1 or sy != 1:
        raise ValueError("orbit does not close in its own class")
    bg = Billiard(g, Direction(1, 1))
    P0, _ = bg.chart_point(x)
    ex, ey = CLASS_SIGNS[x.cls]
    if base_kind == "V":
        if (tx * ex).sign() <= 0:
            raise WindowExceeded()
        m = ty * ey / (tx * ex)
    else:
        if (ty * ey).sign() <= 0:
            raise WindowExceeded()
        m = tx * ex / (ty * ey)
    if m.sign() <= 0:
        raise WindowExceeded()
    d, c = direction_for(m, base_kind, x.cls)
    b = Billiard(g, d)
    start = PhasePoint(x.cell, c, x.s)
    try:
        it = itinerary(b, start, p)
    except ValueError:
        raise WindowExceeded()
    if [(a, k) for a, k, _ in it] != [(a, k) for a, k, _ in itin]:
        raise WindowExceeded()
    q = first_period(b, start, p)
    if q is None or p % q:
        raise WindowExceeded()
    return ContinuationResult(d, c, m, q, p)


# -- cylinders -----------------------------------------------------------------------

@dataclass
class Cylinder:
    intervals: list  # IET intervals in cycle order
    period: int

    @property
    def width(self):
        a, b = self.intervals[0]
        return b - a


@dataclass
class CylinderDecomposition:
    direction: Direction
    cylinders: list
    saddle_set: tuple
    intervals: list  # (chart id, (s_lo, s_hi), period, cylinder index, (u_lo, u_hi))
    extracted: object = None

    def cylinder_of(self, u):
        keys = [iv[4][0] for iv in self.intervals]
        k = bisect_right(keys, u) - 1
        if k < 0:
            return None
        lo, hi = self.intervals[k][4]
        return self.intervals[k][3] if lo < u < hi else None

    def marked_measure(self):
        ch = self.extracted.charts
        tot = Scalar(0)
        for chart, _, _, _, (lo, hi) in self.intervals:
            k = ch.component_of((lo + hi) / 2)
            if ch.components[k].marked:
                tot = tot + (hi - lo)
        return tot


def _rational_direction(slope):
    if isinstance(slope, Direction):
        return slope
    if isinstance(slope, tuple):
        return Direction(*slope)
    q = Fraction(slope)
    return Direction(q.denominator, q.numerator)


def cylinder_decomposition(table, slope, bound=10 ** 6):
    """Split the phase space at all saddle-connection points into periodic cylinders."""
    d = _rational_direction(slope)
    if not (d.dx.is_rational() and d.dy.is_rational()):
        raise ValueError("slope must be rational")
    if table.config.radicand:
        raise ValueError("configuration must be rational")
    ex = extract_iet(table, d)
    T = ex.iet
    fwd = set(T.sing_forward)
    saddle = set(fwd) | set(T.sing_backward)
    for s in T.sing_backward:
        x = s
        for _ in range(bound):
            if x in fwd:
                break
            x = T.apply(x)
            saddle.add(x)
        else:
            raise RuntimeError("saddle orbit did not end within the bound")
    pts = sorted(saddle)
    ivs = []
    for a, b in T.components:
        lo = bisect_right(pts, a)
        cuts = [a] + [p for p in pts[lo:] if p < b] + [b]
        for u, v in zip(cuts, cuts[1:]):
            ivs.append((u, v))
    keys = [iv[0] for iv in ivs]
    nxt = []
    for a, b in ivs:
        m = (a + b) / 2
        y = T.apply(m)
        k = bisect_right(keys, y) - 1
        c, e = ivs[k]
        if c - a != y - m or e - b != y - m:
            raise RuntimeError("saddle set is not invariant")
        nxt.append(k)
    seen = [None] * len(ivs)
    cylinders = []
    for k0 in range(len(ivs)):
        if seen[k0] is not None:
            continue
        cyc = []
        k = k0
        while seen[k] is None:
            seen[k] = len(cylinders)
            cyc.append(ivs[k])
            k = nxt[k]
        cylinders.append(Cylinder(cyc, len(cyc)))
    ch = ex.charts
    out = []
    for k, (a, b) in enumerate(ivs):
        ci = seen[k]
        pa = ch.to_phase((a + b) / 2)
        comp = ch.components[ch.component_of((a + b) / 2)]
        s_lo = ch.b.mu_inverse(a - comp.offset + ch.b.mu(comp.s_lo))
        s_hi = ch.b.mu_inverse(b - comp.offset + ch.b.mu(comp.s_lo))
        out.append(((pa.cell, pa.cls), (s_lo, s_hi), cylinders[ci].period, ci, (a, b)))
    return CylinderDecomposition(d, cylinders, tuple(pts), out, ex)


def periodic_directions(table, q_bound, samples=20, seed=0):
    """Rational slopes ``p/q`` with ``1 <= p, q <= q_bound``, ordered by largest period.

    Each slope is checked by running sampled points until they close up.
    Returns ``[(Fraction slope, max period)]``.
    """
    g = table.config
    if g.radicand:
        raise ValueError("configuration must be rational")
    rnd = random.Random(seed)
    out = []
    for q in range(1, q_bound + 1):
        for p in range(1, q_bound + 1):
            if gcd(p, q) != 1:
                continue
            dec = cylinder_decomposition(table, Fraction(p, q))
            T = dec.extracted.iet
            period = max(c.period for c in dec.cylinders)
            for _ in range(samples):
                a, b = rnd.choice(T.components)
                x0 = a + (b - a) * Scalar(Fraction(rnd.randrange(1, 10 ** 6), 10 ** 6))
                x = x0
                for _ in range(period):
                    x = T.apply(x)
                    if x is None or x == x0:
                        break
                if x is not None and x != x0:
                    raise RuntimeError(f"slope {p}/{q}: sampled orbit did not close")
            out.append((Fraction(p, q), period))
    out.sort(key=lambda t: (t[1], t[0].numerator + t[0].denominator, t[0]))
    return out


def density_threshold(slopes, N):
    """Least prefix length whose directions (with their reflections) are ``1/N``-dense."""
    with mpmath.workdps(50):
        angles = []
        for k, s in enumerate(slopes, start=1):
            s = Fraction(s)
            a = mpmath.atan2(s.numerator, s.denominator)
            angles.extend([a, mpmath.pi - a, mpmath.pi + a, 2 * mpmath.pi - a])
            srt = sorted(angles)
            gaps = [b - a for a, b in zip(srt, srt[1:])] + [srt[0] + 2 * mpmath.pi - srt[-1]]
            if max(gaps) <= mpmath.mpf(2) / N:
                return k
    return None


def robust_core(I, proportion):
    """Centered subinterval of relative length ``proportion``."""
    proportion = as_scalar(proportion)
    if not (0 < proportion < 1):
        raise ValueError("proportion must lie strictly between 0 and 1")
    a, b = as_scalar(I[0]), as_scalar(I[1])
    half = (b - a) * proportion / 2
    m = (a + b) / 2
    return (m - half, m + half)

"""Dyadic covers of the marked charts and the finite checks built on them.

``cover_coverage`` certifies that every interval of a dyadic cover spreads
over the whole marked region within a uniform window ``[K, L]``.  The
endpoint collection gathers every point where the pieces of those images
can end; if these points are distinct and keep their order under small
perturbations, the same window keeps working.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .billiard import Direction, PhasePoint
from .config import Configuration, TreeSpec, cells_in_rhombus
from .exactnum import Scalar, as_scalar
from .extract import _vertices, build_table, extract_iet
from .iet import ConnectionRecord, coverage_certificate

__all__ = [
    "DyadicCover",
    "CoverResult",
    "EndpointOrderRecord",
    "ProbeReport",
    "dyadic_cover",
    "dyadic_points",
    "star_connection_scan",
    "cover_coverage",
    "endpoint_order",
    "stability_probe",
]


@dataclass(frozen=True)
class DyadicCover:
    """The same list of chart intervals is used on every marked chart."""

    N: int
    r: Scalar
    intervals: tuple

    @property
    def spacing(self):
        return 2 * self.r / 2 ** self.N


def dyadic_cover(N, r):
    if N < 1:
        raise ValueError("cover level must be at least 1")
    r = as_scalar(r)
    h = 2 * r / 2 ** N
    top = 4 * r
    ivs = []
    for i in range(2 ** (N + 1) + 1):
        lo = h * (i - 1)
        hi = h * (i + 1)
        ivs.append((lo if lo > 0 else Scalar(0), hi if hi < top else top))
    return DyadicCover(N, r, tuple(ivs))


def dyadic_points(N, r):
    """Interior cover endpoints ``h*i``, ``0 < i < 2^(N+1)``."""
    h = 2 * as_scalar(r) / 2 ** N
    return [h * i for i in range(1, 2 ** (N + 1))]


def _marked_dyadic_u(ex, N):
    """IET coordinates of dyadic points on the marked charts, with labels."""
    out = {}
    r = ex.table.config.r
    for k, comp in enumerate(ex.charts.components):
        if not comp.marked:
            continue
        for i, s in enumerate(dyadic_points(N, r), start=1):
            if comp.s_lo < s < comp.s_hi:
                u = comp.offset + ex.billiard.mu(s) - ex.billiard.mu(comp.s_lo)
                out[u] = (comp.cell, comp.cls, i)
    return out


def star_connection_scan(table, direction, N, max_steps):
    """Finite orbits between singular or dyadic points.

    Orbits start at backward-singular and dyadic points and stop at
    forward-singular or dyadic points.  An orbit that comes back to its own
    dyadic start is a periodic closure and is not reported.
    """
    ex = extract_iet(table, direction)
    T = ex.iet
    dy = _marked_dyadic_u(ex, N)
    fwd = set(T.sing_forward)
    bwd = set(T.sing_backward)
    out = []
    for start in sorted(bwd | set(dy)):
        orbit = [start]
        x = start
        for _ in range(max_steps):
            if x in fwd or (x in dy and len(orbit) > 1 and x != start):
                a = "genuine" if start in bwd else "dyadic"
                b = "genuine" if x in fwd else "dyadic"
                kind = a if a == b else "mixed"
                out.append(ConnectionRecord(tuple(orbit), len(orbit), kind))
                break
            x = T.apply(x)
            if x == start:
                break
            orbit.append(x)
    return out


@dataclass
class CoverResult:
    ok: bool
    K: int
    L: int
    certificates: list
    seeds: list
    failure: tuple = None  # (seed chart, seed interval, gaps, exhausted)
    extracted: object = None


def cover_coverage(table, direction, N, step_bound, extracted=None):
    """Uniform window over all dyadic cover intervals of the marked charts."""
    ex = extracted or extract_iet(table, direction)
    T = ex.iet
    target = ex.charts.marked_intervals()
    cover = dyadic_cover(N, table.config.r)
    certs, seeds = [], []
    for comp in ex.charts.components:
        if not comp.marked:
            continue
        for lo, hi in cover.intervals:
            pieces = ex.charts.s_interval_to_u(comp.cell, comp.cls, lo, hi)
            for I in pieces:
                cert = coverage_certificate(T, I, step_bound, target=target)
                certs.append(cert)
                seeds.append(((comp.cell, comp.cls), (lo, hi)))
                if not cert.covered:
                    return CoverResult(False, 0, 0, certs, seeds,
                                       failure=((comp.cell, comp.cls), (lo, hi), cert.gaps, cert.exhausted),
                                       extracted=ex)
    K = min(c.K for c in certs)
    L = max(c.L for c in certs)
    return CoverResult(True, K, L, certs, seeds, extracted=ex)


# -- endpoint collections ------------------------------------------------------------

@dataclass
class EndpointOrderRecord:
    points: list  # (chart id, s, tag, generator key)
    order: dict  # chart id -> list of generator keys sorted by s
    distinct: bool
    coincidences: list = field(default_factory=list)
    min_gap: Scalar = None
    K: int = 0
    L: int = 0

    def tags(self):
        return sorted({p[2] for p in self.points})


def _marked_lookup(ex):
    marked = [k for k, c in enumerate(ex.charts.components) if c.marked]
    return set(marked)


def _orbit_points(T, x, steps, backward=False, side=0):
    """Points ``T^i(x)``, ``1 <= i <= steps`` (one-sided when ``side`` is nonzero)."""
    out = []
    for i in range(1, steps + 1):
        x = T.apply_side(x, side, backward=backward) if side else T.apply(x, backward=backward)
        if x is None:
            break
        out.append((i, x))
    return out


def endpoint_order(ex, K, L, N):
    """Collect the endpoint points of the window ``[K, L]`` and sort them per chart.

    Each point remembers the trajectory it lies on: a tree vertex together
    with the time direction away from it, or a dyadic seed.  A chart endpoint
    is the same vertex seen from two adjacent charts, and the backward orbit
    of a vertex is the orbit that dies there, so generators sharing a source
    land on the same points by construction.  Only points reached from two
    different sources count as coincidences.
    """
    T = ex.iet
    charts = ex.charts
    b = ex.billiard
    marked = _marked_lookup(ex)
    vertex_of = {label: q for q, label in _vertices(ex.table.config, ex.table.trees)}
    raw = {}

    def geometric(cell, cls, s):
        q = b.chart_point(PhasePoint(cell, cls, s))[0]
        return q if q in vertices else None

    vertices = set(vertex_of.values())

    def add(u, tag, key, source):
        k = charts.component_of(u)
        if k is None or k not in marked:
            return
        raw.setdefault(u, []).append((tag, key, source))

    for u, label in ex.forward_labels.items():
        src = (vertex_of[label[0]], -1)
        add(u, "boundary-truncation", ("sf", label, 0), src)
        for i, x in _orbit_points(T, u, -K, backward=True):
            add(x, "boundary-truncation", ("sf", label, -i), src)
    for u, label in ex.backward_labels.items():
        (cell, corner), cls = label
        if corner == "mid":
            src = (b.chart_point(PhasePoint(cell, cls, b.two_r))[0], 1)
        else:
            src = (vertex_of[label[0]], 1)
        add(u, "boundary-truncation", ("sb", label, 0), src)
        for i, x in _orbit_points(T, u, L):
            add(x, "boundary-truncation", ("sb", label, i), src)
    for k in marked:
        a, e = charts.interval(k)
        comp = charts.components[k]
        for end, x0, side, s in (("lo", a, 1, comp.s_lo), ("hi", e, -1, comp.s_hi)):
            key0 = (comp.cell, comp.cls, end)
            q = b.chart_point(PhasePoint(comp.cell, comp.cls, s))[0]
            for i, x in _orbit_points(T, x0, L, side=side):
                add(x, "corner-orbit", ("co", key0, i), (q, 1))
            for i, x in _orbit_points(T, x0, -K, backward=True, side=side):
                add(x, "corner-orbit", ("co", key0, -i), (q, -1))
    for u, (cell, cls, i) in _marked_dyadic_u(ex, N).items():
        key0 = (cell, cls, i)
        q = geometric(cell, cls, dyadic_points(N, ex.table.config.r)[i - 1]) or key0
        add(u, "seed-endpoint", ("se", key0, 0), (q, 1))
        for j, x in _orbit_points(T, u, L):
            add(x, "seed-endpoint", ("se", key0, j), (q, 1))
        for j, x in _orbit_points(T, u, -K, backward=True):
            add(x, "seed-endpoint", ("se", key0, -j), (q, -1))

    points, coincident = [], []
    for u, gens in raw.items():
        if len({g[2] for g in gens}) > 1:
            coincident.append((u, [g[:2] for g in gens]))
        pp = charts.to_phase(u)
        for tag, key, _ in gens:
            points.append(((pp.cell, pp.cls), pp.s, tag, key))
    order = {}
    for chart, s, tag, key in sorted(points, key=lambda p: (p[0], p[1])):
        order.setdefault(chart, []).append((s, key))
    min_gap = None
    for chart, seq in order.items():
        for (s1, _), (s2, _) in zip(seq, seq[1:]):
            if s2 > s1 and (min_gap is None or s2 - s1 < min_gap):
                min_gap = s2 - s1
    keyed = {c: [k for _, k in seq] for c, seq in order.items()}
    return EndpointOrderRecord(points, keyed, not coincident, coincident, min_gap, K, L)


@dataclass
class ProbeReport:
    preserved: bool
    trials: int
    broken: list
    min_gap: Scalar
    rechecked: list = field(default_factory=list)


def _perturb(f, N, delta, rnd):
    """Random rational move of every tree of the marked region by less than ``delta``."""
    if not delta:
        return f
    updates = {}
    den = 10 ** 6
    dq = delta.to_fraction() if delta.is_rational() else Fraction(float(delta)).limit_denominator(den)
    for cell in cells_in_rhombus(N):
        t = f.tree(cell)
        if t is None:
            continue
        dx = Fraction(rnd.randrange(-den + 1, den), den) * dq / 2
        dy = Fraction(rnd.randrange(-den + 1, den), den) * dq / 2
        spec = TreeSpec(t.a + dx, t.b + dy)
        if spec.fits(f.r, strict=True):
            updates[cell] = spec
    return f.replace(updates)


def stability_probe(f, N, direction, record, delta, trials, cover_level, seed=0, recheck=0, step_bound=None):
    """Recompute the endpoint order for random nearby tables and directions.

    The order counts as preserved when every chart lists the same generators
    in the same order.  ``min_gap`` of the original record bounds any
    admissible perturbation size from above.
    """
    delta = as_scalar(delta)
    rnd = random.Random(seed)
    broken, rechecked = [], []
    for t in range(trials):
        g = _perturb(f, N, delta, rnd)
        if delta:
            eps = Fraction(rnd.randrange(1, 10 ** 6), 10 ** 6) * (delta.to_fraction() if delta.is_rational() else Fraction(0))
            d2 = Direction(direction.dx, direction.dy + Scalar(eps) / 2)
        else:
            d2 = direction
        ex = extract_iet(build_table(g, N), d2)
        rec = endpoint_order(ex, record.K, record.L, cover_level)
        if rec.order != record.order:
            broken.append(t)
        elif t < recheck:
            res = cover_coverage(ex.table, d2, cover_level, step_bound or (record.L - record.K), extracted=ex)
            rechecked.append(res.ok and res.K >= record.K and res.L <= record.L)
    return ProbeReport(not broken, trials, broken, record.min_gap, rechecked)

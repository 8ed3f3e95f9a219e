"""Deterministic SVG drawings of tables, orbits and cylinders."""

from __future__ import annotations

from .billiard import Billiard, PhasePoint, TrajectoryEvent
from .config import Cell, cells_in_rhombus

__all__ = ["render_svg", "orbit_points", "cylinder_bands"]

_PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"]


def _fmt(v):
    s = format(float(v), ".12g")
    return "0" if s == "-0" else s


def _pt(x, y, scale):
    return f"{_fmt(x * scale)},{_fmt(-y * scale)}"


def orbit_points(g, direction, pp, steps):
    """Cartesian hit points of the orbit of ``pp`` (the start included)."""
    b = Billiard(g, direction)
    pts = [b.chart_point(pp)[0]]
    cur = pp
    for _ in range(steps):
        nxt = b.step(cur)
        if isinstance(nxt, TrajectoryEvent):
            if isinstance(nxt.at, tuple):
                pts.append(nxt.at)
            break
        pts.append(b.chart_point(nxt)[0])
        cur = nxt
    return pts


def _u_point(charts, u, k):
    c = charts.components[k]
    b = charts.b
    s = b.mu_inverse(u - c.offset + b.mu(c.s_lo))
    return b.chart_point(PhasePoint(c.cell, c.cls, s))[0]


def cylinder_bands(decomposition):
    """One list of quadrilaterals per cylinder: the flights of its intervals."""
    ex = decomposition.extracted
    T, charts = ex.iet, ex.charts
    bands = []
    for cyl in decomposition.cylinders:
        quads = []
        for a, b in cyl.intervals:
            m = (a + b) / 2
            k = charts.component_of(m)
            y = T.apply(m)
            k2 = charts.component_of(y)
            sh = y - m
            quads.append([_u_point(charts, a, k), _u_point(charts, b, k),
                          _u_point(charts, b + sh, k2), _u_point(charts, a + sh, k2)])
        bands.append(quads)
    return bands


def render_svg(g, N, orbit=(), bands=(), scale=40, margin=1):
    """SVG text for the trees of level at most ``N + 2``, the rhombus of size ``N``,
    an optional orbit polyline and optional cylinder bands."""
    ext = N + 1 + margin
    size = 2 * ext * scale
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{-ext * scale} {-ext * scale} {size} {size}">',
        '<rect x="{0}" y="{0}" width="{1}" height="{1}" fill="white"/>'.format(-ext * scale, size),
    ]
    for idx, quads in enumerate(bands):
        col = _PALETTE[idx % len(_PALETTE)]
        lines.append(f'<g fill="{col}" fill-opacity="0.35" stroke="none">')
        for q in quads:
            lines.append('<polygon points="{}"/>'.format(" ".join(_pt(x, y, scale) for x, y in q)))
        lines.append("</g>")
    lines.append('<g fill="#555555" stroke="black" stroke-width="0.5">')
    for cell in sorted(cells_in_rhombus(N + 2)):
        bx = g.box(cell)
        if bx is None:
            continue
        x1, x2, y1, y2 = bx
        lines.append(
            f'<rect x="{_fmt(x1 * scale)}" y="{_fmt(-y2 * scale)}" '
            f'width="{_fmt((x2 - x1) * scale)}" height="{_fmt((y2 - y1) * scale)}"/>'
        )
    lines.append("</g>")
    c = N
    rh = [(c, 0), (0, c), (-c, 0), (0, -c)]
    lines.append(
        '<polygon points="{}" fill="none" stroke="#888888" stroke-dasharray="3,3"/>'.format(
            " ".join(_pt(x, y, scale) for x, y in rh))
    )
    if len(orbit) > 1:
        lines.append(
            '<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1"/>'.format(
                " ".join(_pt(x, y, scale) for x, y in orbit))
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

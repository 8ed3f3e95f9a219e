import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from windtree.billiard import (CLASS_SIGNS, Billiard, Direction, InvalidStateError, PhasePoint, TrajectoryEvent,
                               chart, chart_inverse, events_to_jsonl, flip_class, measure_density,
                               next_collision, orbit, parse_direction, reverse_class)
from windtree.config import Cell, Configuration, TreeSpec, build_ringed
from windtree.exactnum import Scalar, as_scalar

Q = Fraction
QUARTER = Q(1, 4)


def single_tree():
    return Configuration(QUARTER, {Cell(0, 0): TreeSpec(Q(1, 2), Q(1, 2))}, "empty")


# -- brute-force ray oracle -------------------------------------------------------

def brute_first_hit(g, P, v, N):
    """Minimal positive entry time over every tree in the window, then classify."""
    px, py = as_scalar(P[0]), as_scalar(P[1])
    vx, vy = as_scalar(v[0]), as_scalar(v[1])
    best = None
    boxes = []
    for i in range(-N - 3, N + 3):
        for j in range(-N - 3, N + 3):
            bx = g.box(Cell(i, j))
            if bx is None:
                continue
            boxes.append(bx)
            x1, x2, y1, y2 = bx
            tx = sorted(((x1 - px) / vx, (x2 - px) / vx))
            ty = sorted(((y1 - py) / vy, (y2 - py) / vy))
            t_in = max(tx[0], ty[0])
            t_out = min(tx[1], ty[1])
            if t_in <= t_out and t_in > 0 and (best is None or t_in < best):
                best = t_in
    c = Scalar(2 * N + 1) / 2
    t_win = None
    for s1 in (1, -1):
        for s2 in (1, -1):
            rate = s1 * vx + s2 * vy
            if rate > 0:
                t = (c - (s1 * px + s2 * py)) / rate
                if t_win is None or t < t_win:
                    t_win = t
    if best is None or best > t_win:
        return "left_window", None
    hx, hy = px + best * vx, py + best * vy
    vert = any(x in (bx[0], bx[1]) and y in (bx[2], bx[3]) for bx in boxes for x, y in [(hx, hy)])
    on_v = any(hx in (bx[0], bx[1]) and bx[2] <= hy <= bx[3] for bx in boxes)
    on_h = any(hy in (bx[2], bx[3]) and bx[0] <= hx <= bx[1] for bx in boxes)
    kind = "corner_stop" if vert or (on_v and on_h) else "collision"
    return kind, (hx, hy)


def inside_open_tree(g, x, y):
    bx = g.box(Cell(x.floor(), y.floor()))
    return bx is not None and bx[0] < x < bx[1] and bx[2] < y < bx[3]


def test_next_collision_examples():
    g = single_tree()
    ev = next_collision(g, (0, Q(1, 2)), (1, 0), window=2)
    assert ev.kind == "collision" and ev.at.point == (QUARTER, Q(1, 2)) and ev.at.side == "V"
    ev = next_collision(g, (0, 0), (1, 1), window=2)
    assert ev.kind == "corner_stop" and ev.at == (QUARTER, QUARTER)
    with pytest.raises(InvalidStateError, match="invalid state"):
        next_collision(g, (Q(1, 2), Q(1, 2)), (1, 0), window=2)
    assert next_collision(g, (0, Q(1, 2)), (-1, 0), window=2).kind == "left_window"


def test_next_collision_ringed_example(ring2):
    ev = next_collision(ring2, (0, Q(1, 2)), (2, 1), window=2)
    kind, pt = brute_first_hit(ring2, (0, Q(1, 2)), (2, 1), 2)
    assert ev.kind == kind
    got = ev.at.point if kind == "collision" else ev.at
    assert got == pt


def test_grid_walk_matches_brute_force(ring2):
    rnd = random.Random(7)
    b = Billiard(ring2, Direction(1, 1), window=2)
    n = 0
    while n < 1000:
        x = Scalar(Q(rnd.randrange(-250, 250), 100))
        y = Scalar(Q(rnd.randrange(-250, 250), 100))
        if abs(x) + abs(y) >= Q(5, 2) or inside_open_tree(ring2, x, y):
            continue
        v = (rnd.choice([-1, 1]) * rnd.randrange(1, 40), rnd.choice([-1, 1]) * rnd.randrange(1, 40))
        if not b.is_free(x, y, Scalar(v[0]), Scalar(v[1])):
            continue
        n += 1
        hit = b.next_collision((x, y), (Scalar(v[0]), Scalar(v[1])))
        kind, pt = brute_first_hit(ring2, (x, y), v, 2)
        if kind == "left_window":
            assert hit.cell is None
        else:
            assert hit.cell is not None and hit.point == pt
            assert hit.corner == (kind == "corner_stop")


def test_corner_ray_hits_exact_vertex(ring2):
    # aim at every interior tree vertex from a free point
    b = Billiard(ring2, Direction(1, 1), window=2)
    start = (Scalar(0), Scalar(Q(1, 10)))
    for cell in [Cell(0, 0), Cell(-1, 0), Cell(0, -1), Cell(-1, -1)]:
        x1, x2, y1, y2 = ring2.box(cell)
        for q in ((x1, y1), (x1, y2), (x2, y1), (x2, y2)):
            v = (q[0] - start[0], q[1] - start[1])
            kind, pt = brute_first_hit(ring2, start, v, 2)
            hit = b.next_collision(start, v)
            assert (hit.corner, hit.point) == (kind == "corner_stop", pt)


# -- charts ----------------------------------------------------------------------------

def outward_sides(cls):
    """Sides (kind, which end) whose outward normal has positive dot product with the class vector."""
    ex, ey = CLASS_SIGNS[cls]
    return {("V", "right" if ex > 0 else "left"), ("H", "top" if ey > 0 else "bottom")}


@pytest.mark.parametrize("cls", range(4))
def test_chart_sides_match_normal_enumeration(cls):
    g = single_tree()
    x1, x2, y1, y2 = g.box(Cell(0, 0))
    seen = set()
    for s in (Q(1, 8), Q(3, 8), Q(5, 8), Q(7, 8)):
        (x, y), tag = chart(g, (0, 0), cls, s, Direction(1, 1))
        name = {x1: "left", x2: "right"}.get(x) if tag == "V" else {y1: "bottom", y2: "top"}.get(y)
        seen.add((tag, name))
        assert chart_inverse(g, (0, 0), cls, (x, y)) == s
    assert seen == outward_sides(cls)
    (x, y), tag = chart(g, (0, 0), cls, Q(1, 2))
    assert tag == "C" and x in (x1, x2) and y in (y1, y2)


@pytest.mark.parametrize("cls,clockwise", [(0, True), (1, True), (2, False), (3, False)])
def test_chart_orientation(cls, clockwise):
    g = single_tree()
    pts = [chart(g, (0, 0), cls, Q(k, 8))[0] for k in (1, 3, 5, 7)]
    cx = cy = Q(1, 2)
    # signed area of the polygon through consecutive chart points around the centre
    area = sum((a[0] - cx) * (b[1] - cy) - (b[0] - cx) * (a[1] - cy) for a, b in zip(pts, pts[1:]))
    assert (area < 0) == clockwise


def test_chart_rejects_out_of_range():
    with pytest.raises(ValueError):
        chart(single_tree(), (0, 0), 0, Q(2))


@given(st.integers(0, 3), st.fractions(min_value=0, max_value=1, max_denominator=10 ** 4))
def test_chart_inverse_property(cls, s):
    g = build_ringed(2, "1/4")
    for cell in [(0, 0), (-3, 0), (1, 1)]:
        p, _ = chart(g, cell, cls, s)
        assert chart_inverse(g, cell, cls, p) == s


# -- map ------------------------------------------------------------------------------------

def test_reflection_law():
    for c in range(4):
        ex, ey = CLASS_SIGNS[c]
        assert CLASS_SIGNS[flip_class(c, "V")] == (-ex, ey)
        assert CLASS_SIGNS[flip_class(c, "H")] == (ex, -ey)
        assert CLASS_SIGNS[reverse_class(c)] == (-ex, -ey)
        assert flip_class(flip_class(c, "V"), "V") == c and flip_class(flip_class(c, "H"), "H") == c


def test_horizontal_bounce_closes_at_two():
    g = Configuration(QUARTER, {}, "centered")
    ev = orbit(g, Direction(1, 0), PhasePoint(Cell(0, 0), 0, Scalar(Q(3, 4))), 10)
    assert [e.kind for e in ev] == ["collision", "periodic_close"]
    assert ev[0].at.cell == Cell(1, 0)


def test_orbit_zero_steps(ring2):
    assert orbit(ring2, Direction(1, 2), PhasePoint(Cell(0, 0), 0, Scalar(Q(1, 4))), 0) == []


def test_orbit_corner_stop_matches_oracle(ring2):
    # start on the top side of the centred tree in cell (0,0), aimed at a vertex of tree (0,1)
    d = Direction(1, 4)
    b = Billiard(ring2, d)
    start = PhasePoint(Cell(0, 0), 0, Scalar(Q(1, 4)))
    (x, y), _ = b.chart_point(start)
    kind, pt = brute_first_hit(ring2, (x, y), d.vector(0), 6)
    ev = b.orbit(start, 5)
    assert ev[0].kind == kind
    if kind == "corner_stop":
        assert ev[0].at == pt


def test_corner_forward_defined_backward_not(ring2):
    b = Billiard(ring2, Direction(1, 2))
    corner = PhasePoint(Cell(0, 0), 0, Scalar(Q(1, 2)))
    assert isinstance(b.step(corner), PhasePoint)
    ev = b.step(corner, backward=True)
    assert isinstance(ev, TrajectoryEvent) and ev.kind == "corner_stop"


def random_point(b, rnd, cells):
    while True:
        cell = rnd.choice(cells)
        c = rnd.randrange(4)
        s = Scalar(Q(rnd.randrange(1, 10 ** 5), 10 ** 5)) * b.four_r
        pp = PhasePoint(cell, c, s)
        (x, y), side = b.chart_point(pp)
        if side != "C" and b.is_free(x, y, *b.dir.vector(c)):
            return pp


DIRECTIONS = [Direction(1, 2), Direction(3, 5), Direction(1, Scalar(0, 1, 2)), Direction(2, Scalar(1, 1, 2))]


@pytest.mark.parametrize("d", DIRECTIONS, ids=str)
def test_step_inverse_identity(ring2, d):
    b = Billiard(ring2, d)
    rnd = random.Random(1)
    cells = [Cell(0, 0), Cell(-1, 0), Cell(0, -1), Cell(-1, -1)]
    for _ in range(200):
        x = random_point(b, rnd, cells)
        y = b.step(x)
        if isinstance(y, PhasePoint):
            assert b.step(y, backward=True) == x
        z = b.step(x, backward=True)
        if isinstance(z, PhasePoint):
            assert b.step(z) == x


def reversed_state(b, pp):
    (x, y), side = b.chart_point(pp)
    c = reverse_class(flip_class(pp.cls, side))
    return PhasePoint(pp.cell, c, b.chart_coordinate(pp.cell, c, x, y))


@pytest.mark.parametrize("d", DIRECTIONS[:2], ids=str)
def test_flow_reversibility(ring2, d):
    b = Billiard(ring2, d)
    rnd = random.Random(2)
    for _ in range(50):
        x = random_point(b, rnd, [Cell(0, 0), Cell(-1, -1)])
        path = [x]
        for _ in range(8):
            y = b.step(path[-1])
            if not isinstance(y, PhasePoint):
                break
            path.append(y)
        back = reversed_state(b, path[-1])
        pts = [b.chart_point(back)[0]]
        for _ in range(len(path) - 1):
            back = b.step(back)
            pts.append(b.chart_point(back)[0])
        assert pts == [b.chart_point(p)[0] for p in reversed(path)]


@pytest.mark.parametrize("d", DIRECTIONS, ids=str)
def test_step_preserves_measure(ring2, d):
    b = Billiard(ring2, d)
    rnd = random.Random(3)
    h = Scalar(Q(1, 10 ** 4))
    checked = 0
    for _ in range(300):
        x = random_point(b, rnd, [Cell(0, 0), Cell(-1, 0)])
        if x.s + h >= b.four_r or b.side_of(x) != b.side_of(PhasePoint(x.cell, x.cls, x.s + h)):
            continue
        x2 = PhasePoint(x.cell, x.cls, x.s + h)
        (px, py), _ = b.chart_point(x2)
        if not b.is_free(px, py, *d.vector(x.cls)):
            continue
        y, y2 = b.step(x), b.step(x2)
        if not (isinstance(y, PhasePoint) and isinstance(y2, PhasePoint)):
            continue
        if (y.cell, y.cls) != (y2.cell, y2.cls):
            continue
        checked += 1
        assert abs(b.mu(y2.s) - b.mu(y.s)) == b.mu(x2.s) - b.mu(x.s)
    assert checked > 50


def test_measure_density_examples():
    assert measure_density(Direction(1, 0), "V") == 1
    assert measure_density(Direction(1, 0), "H") == 0
    d = Direction(3, 4)
    assert measure_density(d, "V") == 3 and measure_density(d, "H") == 4
    b = Billiard(build_ringed(2, "1/4"), d)
    assert b.mu(b.four_r) == 2 * b.r * 7


@given(st.integers(1, 50), st.integers(1, 50))
def test_direction_normalization(a, c):
    d = Direction(2 * a, 2 * c)
    assert d == Direction(a, c)
    ratio = measure_density(Direction(Scalar(2 * a), Scalar(0, 2 * c, 2)), "V") / \
        measure_density(Direction(Scalar(2 * a), Scalar(0, 2 * c, 2)), "H")
    assert ratio == measure_density(Direction(a, Scalar(0, c, 2)), "V") / \
        measure_density(Direction(a, Scalar(0, c, 2)), "H")


def test_parse_direction():
    d, c = parse_direction("1,2")
    assert (d.dx, d.dy, c) == (1, 2, 0)
    d, c = parse_direction("-1/2")
    assert (d.dx, d.dy, c) == (2, 1, 3)
    d, c = parse_direction("(1, sqrt(2))")
    assert d.dy == Scalar(0, 1, 2)
    with pytest.raises(ValueError):
        parse_direction("0,0")
    with pytest.raises(ValueError):
        parse_direction("1,,2")


def test_jsonl_dump(ring2):
    ev = orbit(ring2, Direction(1, 2), PhasePoint(Cell(0, 1), 1, Scalar(Q(1, 8))), 3)
    lines = events_to_jsonl(ev).splitlines()
    assert len(lines) == len(ev)
    assert '"s": "1/4"' in lines[0]

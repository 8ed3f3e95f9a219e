import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from windtree.billiard import Billiard, Direction, PhasePoint
from windtree.config import Cell, TreeSpec
from windtree.exactnum import Scalar
from windtree.periodic import (WindowExceeded, continue_periodic, cylinder_decomposition, density_threshold,
                               direction_for, direction_window, first_period, itinerary,
                               periodic_directions, robust_core, slope_parameter)

Q = Fraction


def base_point(g, cell, cls, x, y):
    b = Billiard(g, Direction(1, 1))
    return PhasePoint(cell, cls, b.chart_coordinate(cell, cls, Scalar(x), Scalar(y)))


def sides(g, x, m, kind, p):
    d, c = direction_for(m, kind, x.cls)
    return [(cell, k) for cell, k, _ in itinerary(Billiard(g, d), PhasePoint(x.cell, c, x.s), p)]


def test_window_empty_itinerary(ring2):
    x = base_point(ring2, Cell(0, 0), 0, Q(3, 4), Q(1, 2))
    w = direction_window(ring2, Direction(4, 1), x, 0)
    assert w.slope_interval == (None, None)
    assert w.contains(Scalar(10 ** 9)) and w.contains(Scalar(Q(1, 10 ** 9)))


def test_window_single_bounce(ring2):
    # from (3/4, y0) on the right side of tree (0,0) straight across to tree (1,0)
    x1, x2, y1, y2 = ring2.box(Cell(1, 0))
    for y0 in (Q(1, 2), Q(3, 8)):
        x = base_point(ring2, Cell(0, 0), 0, Q(3, 4), y0)
        w = direction_window(ring2, Direction(4, 1), x, 1)
        assert w.base_kind == "V"
        assert w.itinerary[0][:2] == (Cell(1, 0), "V")
        # bounded by the rays through the two corners of the facing side
        run = x1 - Q(3, 4)
        lo = max(Scalar(0), (y1 - y0) / run)
        assert w.slope_interval == (lo, (y2 - y0) / run)


def test_window_mirror(ring2):
    # y -> -y maps the table to itself, cell row j to -1 - j, and swaps classes 0 and 3
    up = direction_window(ring2, Direction(4, 1), base_point(ring2, Cell(0, 0), 0, Q(3, 4), Q(5, 8)), 4)
    down = direction_window(ring2, Direction(4, 1), base_point(ring2, Cell(0, -1), 3, Q(3, 4), -Q(5, 8)), 4)
    assert up.slope_interval == down.slope_interval
    assert [(c.i, k) for c, k, _ in up.itinerary] == [(c.i, k) for c, k, _ in down.itinerary]
    assert [c.j for c, _, _ in up.itinerary] == [-1 - c.j for c, _, _ in down.itinerary]


@pytest.fixture(scope="module")
def periodic_window(ring2):
    x = PhasePoint(Cell(0, 1), 1, Scalar(Q(1, 8)))
    d = Direction(2, 1)
    p = first_period(Billiard(ring2, d), x, 1000)
    return x, d, p, direction_window(ring2, d, x, p)


def test_window_inside_reproduces_itinerary(ring2, periodic_window):
    x, d, p, w = periodic_window
    lo, hi = w.slope_interval
    assert lo < slope_parameter(d, w.base_kind) < hi
    ref = [(c, k) for c, k, _ in w.itinerary]
    rnd = random.Random(2)
    for _ in range(1000):
        m = lo + (hi - lo) * Scalar(Q(rnd.randrange(1, 10 ** 6), 10 ** 6))
        assert sides(ring2, x, m, w.base_kind, p) == ref


def test_window_outside_differs(ring2, periodic_window):
    x, d, p, w = periodic_window
    lo, hi = w.slope_interval
    ref = [(c, k) for c, k, _ in w.itinerary]
    for m in (lo - Scalar(Q(1, 10 ** 6)), hi + Scalar(Q(1, 10 ** 6))):
        try:
            assert sides(ring2, x, m, w.base_kind, p) != ref
        except ValueError:
            pass  # the orbit stops at a vertex before step p


def landing(g, x, m, kind, p):
    d, c = direction_for(m, kind, x.cls)
    b = Billiard(g, d)
    cur = PhasePoint(x.cell, c, x.s)
    for _ in range(p):
        cur = b.step(cur)
    return cur.s


def test_landing_affine(ring2, periodic_window):
    x, d, p, w = periodic_window
    lo, hi = w.slope_interval
    ms = [lo + (hi - lo) * Scalar(Q(k, 7)) for k in (1, 3, 6)]
    s = [landing(ring2, x, m, w.base_kind, p) for m in ms]
    assert (s[1] - s[0]) * (ms[2] - ms[0]) == (s[2] - s[0]) * (ms[1] - ms[0])
    assert w.landing_interval[0] is not None and w.landing_interval[1] is not None


def test_window_corner_error(ring2):
    b = Billiard(ring2, Direction(1, 1))
    with pytest.raises(ValueError):
        direction_window(ring2, Direction(1, 1), PhasePoint(Cell(0, 0), 0, b.two_r), 3)


def moved(g, cell, dx, dy=0):
    t = g.tree(cell)
    return g.replace({cell: TreeSpec(t.a + dx, t.b + dy)})


def test_continue_identity(ring2, periodic_window):
    x, d, p, w = periodic_window
    res = continue_periodic(ring2, ring2, d, x)
    assert res.direction == d and res.cls == x.cls and res.period == p


def test_continue_matches_secant_solve(ring2):
    """Within one itinerary the landing point is affine in the slope parameter, so
    two direct simulations on the moved table pin down the closing slope."""
    x = PhasePoint(Cell(0, 1), 1, Scalar(Q(9, 16)))
    d = Direction(2, 1)
    p = first_period(Billiard(ring2, d), x, 1000)
    g = moved(ring2, Cell(0, 0), Q(1, 100))
    w = direction_window(g, d, x, p)
    lo, hi = w.slope_interval
    m1, m2 = lo + (hi - lo) / 3, lo + 2 * (hi - lo) / 3
    s1, s2 = landing(g, x, m1, w.base_kind, p), landing(g, x, m2, w.base_kind, p)
    root = m1 + (x.s - s1) * (m2 - m1) / (s2 - s1)
    res = continue_periodic(ring2, g, d, x)
    assert res.slope == root
    assert res.slope != slope_parameter(d, w.base_kind)


def test_continue_moved_tree(ring2):
    g = moved(ring2, Cell(0, 0), Q(1, 100))
    x = PhasePoint(Cell(0, 1), 1, Scalar(Q(9, 16)))
    d = Direction(2, 1)
    res = continue_periodic(ring2, g, d, x)
    p = first_period(Billiard(ring2, d), x, 1000)
    b = Billiard(g, res.direction)
    start = PhasePoint(x.cell, res.cls, x.s)
    assert first_period(b, start, p) == res.period and p % res.period == 0
    back = continue_periodic(g, ring2, res.direction, start)
    assert back.direction == d


def test_continue_too_far(ring2):
    g = moved(ring2, Cell(0, 0), Q(1, 5))
    x = PhasePoint(Cell(0, 1), 1, Scalar(Q(9, 16)))
    with pytest.raises(ValueError):
        continue_periodic(ring2, g, Direction(2, 1), x)


def test_continue_not_periodic(ring2):
    x = PhasePoint(Cell(0, 1), 1, Scalar(Q(9, 16)))
    with pytest.raises(ValueError, match="not periodic"):
        continue_periodic(ring2, ring2, Direction(1, Scalar(0, 1, 2)), x, bound=200)


def test_robust_core_arithmetic():
    a, b = robust_core((Scalar(0), Scalar(1)), 1 - Q(1, 7 * 3))
    assert (b - a) == Scalar(Q(20, 21)) and a + b == 1
    a, b = robust_core((Scalar(2), Scalar(3)), Q(999999, 10 ** 6))
    assert a - 2 == Scalar(Q(1, 2 * 10 ** 6))
    with pytest.raises(ValueError):
        robust_core((Scalar(0), Scalar(1)), 1)


def test_robust_core_constancy(ring2, table2):
    g = moved(ring2, Cell(0, 0), Q(1, 100))
    dec = cylinder_decomposition(table2, Q(1, 2))
    (cell, cls), (lo, hi), per, ci, _ = next(iv for iv in dec.intervals
                                            if iv[0][0] in table2.marked_trees and iv[2] == 14)
    a, b = robust_core((lo, hi), Q(20, 21))
    slopes = {continue_periodic(ring2, g, Direction(2, 1),
                                PhasePoint(cell, cls, a + (b - a) * Scalar(Q(k, 11)))).slope
              for k in range(1, 11)}
    assert len(slopes) == 1


def test_periodic_directions(table2):
    out = periodic_directions(table2, 3, samples=10)
    assert {s for s, _ in out} == {Q(1), Q(1, 2), Q(2), Q(1, 3), Q(3), Q(2, 3), Q(3, 2)}
    periods = [p for _, p in out]
    assert periods == sorted(periods)


def test_periodic_directions_irrational_config():
    from windtree.config import build_ringed
    from windtree.extract import build_table

    g = build_ringed(2, "1/4").replace({Cell(0, 0): TreeSpec(Scalar(Q(1, 2), Q(1, 100), 2), Scalar(Q(1, 2)))})
    with pytest.raises(ValueError, match="rational"):
        periodic_directions(build_table(g, 2), 2)


def gap_oracle(slopes):
    angles = []
    for s in slopes:
        a = math.atan2(s.numerator, s.denominator)
        angles += [a, math.pi - a, math.pi + a, 2 * math.pi - a]
    angles.sort()
    return max([b - a for a, b in zip(angles, angles[1:])] + [angles[0] + 2 * math.pi - angles[-1]])


def test_density_threshold():
    slopes = [Q(1), Q(1, 2), Q(2), Q(1, 3), Q(3), Q(2, 3), Q(3, 2)]
    assert density_threshold([Q(1)], 1) == 1
    assert density_threshold([Q(1)], 2) is None
    for N in range(1, 6):
        k = density_threshold(slopes, N)
        if k is None:
            assert gap_oracle(slopes) > 2 / N
        else:
            assert gap_oracle(slopes[:k]) <= 2 / N
            assert k == 1 or gap_oracle(slopes[:k - 1]) > 2 / N


@pytest.mark.parametrize("slope", [Q(1), Q(1, 2), Q(2, 3)])
def test_cylinders_measure(table2, slope):
    dec = cylinder_decomposition(table2, slope)
    ch = dec.extracted.charts
    assert dec.marked_measure() == sum((b - a for a, b in ch.marked_intervals()), Scalar(0))
    for cyl in dec.cylinders:
        widths = {b - a for a, b in cyl.intervals}
        assert len(widths) == 1
    # intervals tile every component
    T = dec.extracted.iet
    assert sum((b - a for *_, (a, b) in dec.intervals), Scalar(0)) == T.measure


def orbit_word(T, u):
    """Piece indices visited until the orbit closes, rotated to a canonical start."""
    starts = [p.lo for p in T.pieces]
    import bisect

    word, x = [], u
    while True:
        word.append(bisect.bisect_right(starts, x) - 1)
        x = T.apply(x)
        if x == u:
            break
    k = min(range(len(word)), key=lambda i: word[i:] + word[:i])
    return tuple(word[k:] + word[:k])


def test_cylinders_grid_oracle(table2):
    dec = cylinder_decomposition(table2, Q(1))
    T = dec.extracted.iet
    saddle = set(dec.saddle_set)
    runs = 0
    words = {}
    for a, b in T.components:
        prev = None
        n = int(((b - a) * 16).floor())
        for k in range(1, n):
            u = a + (b - a) * Scalar(Q(2 * k - 1, 2 * n))
            if u in saddle:
                continue
            w = orbit_word(T, u)
            ci = dec.cylinder_of(u)
            assert len(w) == dec.cylinders[ci].period
            words.setdefault(w, set()).add(ci)
            if w != prev:
                runs += 1
            prev = w
    # one cylinder per closed itinerary and vice versa
    assert all(len(v) == 1 for v in words.values())
    assert len(words) == len(dec.cylinders)
    assert runs <= len(dec.intervals)


def test_cylinders_reject_irrational(table2):
    with pytest.raises(ValueError):
        cylinder_decomposition(table2, Direction(1, Scalar(0, 1, 2)))


@given(st.sampled_from([Q(1), Q(1, 2), Q(2, 3)]), st.integers(0, 10 ** 6))
def test_cylinder_membership_periodic(slope, seed):
    dec = _dec(slope)
    T = dec.extracted.iet
    rnd = random.Random(seed)
    a, b = rnd.choice(T.components)
    u = a + (b - a) * Scalar(Q(rnd.randrange(1, 10 ** 6), 10 ** 6))
    ci = dec.cylinder_of(u)
    if ci is None:
        assert u in dec.saddle_set
        return
    x = u
    for k in range(dec.cylinders[ci].period):
        x = T.apply(x)
        assert (x == u) == (k == dec.cylinders[ci].period - 1)


_DECS = {}


def _dec(slope):
    from windtree.config import build_ringed
    from windtree.extract import build_table

    if slope not in _DECS:
        _DECS[slope] = cylinder_decomposition(build_table(build_ringed(2, "1/4"), 2), slope)
    return _DECS[slope]

"""Passage through nested rings and the search for escaping orbits.

Rings of sizes ``N_1 < N_2 < ...`` split the trees into annuli: annulus 0
holds the trees with level at most ``N_1``, annulus ``j`` those with level
in ``[N_j + 1, N_{j+1}]`` and the last one everything further out.  Every
phase point therefore has exactly one annulus index, and the passage maps
below are defined in terms of it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .billiard import Billiard, Direction, PhasePoint, TrajectoryEvent
from .config import Cell, cell_level, cells_in_rhombus, ring_cells
from .exactnum import Scalar, as_scalar
from .extract import build_table, extract_iet

__all__ = [
    "RingLayout",
    "PassageResult",
    "EscapeSearchRecord",
    "blocking_check",
    "passage_map",
    "relations_check",
    "escape_search",
    "sample_ring_points",
]


@dataclass(frozen=True)
class RingLayout:
    sizes: tuple

    def index(self, cell):
        lv = cell_level(*cell)
        return sum(1 for n in self.sizes if lv >= n + 1)

    @property
    def count(self):
        return len(self.sizes) + 1


class PassageResult:
    """Outcome of a passage map: ``point`` is set when ``status == "ok"``."""

    __slots__ = ("point", "status", "steps")

    def __init__(self, point, status, steps):
        self.point, self.status, self.steps = point, status, steps

    @property
    def defined(self):
        return self.status == "ok"

    def __repr__(self):
        return f"PassageResult({self.point}, {self.status}, {self.steps})"


def blocking_check(g, direction, N, eps, samples=200, steps=60, seed=0):
    """Directions far from the axes cannot slip through the ring of size ``N``.

    Returns ``(condition, witness)``; when the slope condition holds,
    sampled orbits from inside are run and any flight that jumps from level
    ``<= N`` to beyond the ring (or back) without touching a ring tree is
    returned as the witness.
    """
    eps = as_scalar(eps)
    bound = eps / (2 * g.r)
    dx, dy = direction.dx, direction.dy
    cond = bool(dx) and bool(dy) and dy >= bound * dx and dx >= bound * dy
    if not cond:
        return False, None
    ring = ring_cells(N)
    rnd = random.Random(seed)
    inner = [c for c in _cells_upto(N) if g.box(c) is not None]
    for _ in range(samples):
        cell = rnd.choice(inner)
        for c in rnd.sample(range(4), 4):
            b = Billiard(g, direction)
            s = b.four_r * Scalar(Fraction(rnd.randrange(1, 10 ** 6), 10 ** 6))
            pp = PhasePoint(cell, c, s)
            (x, y), _ = b.chart_point(pp)
            if b.is_free(x, y, *direction.vector(c)):
                break
        else:
            continue
        cur = pp
        for _ in range(steps):
            nxt = b.step(cur)
            if isinstance(nxt, TrajectoryEvent):
                break
            la, lb = cell_level(*cur.cell), cell_level(*nxt.cell)
            crossing = (la <= N and lb > N + 2) or (lb <= N and la > N + 2)
            if crossing and cur.cell not in ring and nxt.cell not in ring:
                return True, (cur, nxt)
            cur = nxt
    return True, None


def _cells_upto(N):
    return [Cell(i, j) for i in range(-N - 1, N + 1) for j in range(-N - 1, N + 1)
            if cell_level(i, j) <= N]


def passage_map(b, layout, x, mode, step_bound):
    """``S+``, ``S-``, ``R+`` or ``R-`` of ``x`` for the billiard ``b``."""
    j = layout.index(x.cell)
    backward = mode in ("S-", "R-")
    cur = x
    for k in range(1, step_bound + 1):
        nxt = b.step(cur, backward=backward)
        if isinstance(nxt, TrajectoryEvent):
            return PassageResult(None, "corner" if nxt.kind == "corner_stop" else nxt.kind, k)
        jn = layout.index(nxt.cell)
        if mode in ("S+", "S-"):
            if abs(jn - j) == 1:
                return PassageResult(nxt, "ok", k)
            if jn != j:
                return PassageResult(None, "jump", k)
        else:
            if jn != j:
                return PassageResult(cur, "ok", k - 1)
        cur = nxt
    return PassageResult(None, "bound", step_bound)


@dataclass
class RelationsReport:
    checked: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    per_identity: dict = field(default_factory=dict)


def relations_check(b, layout, samples, step_bound):
    """Check the partial-map identities between passage and in-ring maps."""
    rep = RelationsReport()
    memo = {}

    def P(mode, x):
        if x is None:
            return None
        key = (mode, x)
        if key not in memo:
            res = passage_map(b, layout, x, mode, step_bound)
            memo[key] = res.point if res.defined else None
        return memo[key]

    def check(name, lhs, rhs, x):
        if lhs is None or rhs is None:
            rep.skipped += 1
            return
        rep.checked += 1
        rep.per_identity[name] = rep.per_identity.get(name, 0) + 1
        if lhs != rhs:
            rep.violations.append((name, x, lhs, rhs))

    for x in samples:
        sp, sm = P("S+", x), P("S-", x)
        check("R- S+ = S+", P("R-", sp), sp, x)
        check("R- R+ S+ = S+", P("R-", P("R+", sp)), sp, x)
        check("R+ S- = S-", P("R+", sm), sm, x)
        check("R+ R- S- = S-", P("R+", P("R-", sm)), sm, x)
        check("S- S+ = R+", P("S-", sp), P("R+", x), x)
        check("S+ S- = R-", P("S+", sm), P("R-", x), x)
    return rep


def sample_ring_points(b, layout, j, count, seed=0, cells=None):
    """Random phase points on trees of annulus ``j`` whose class points into the table."""
    rnd = random.Random(seed)
    if cells is None:
        reach = max(layout.sizes) + 2
        cells = [c for c in sorted(cells_in_rhombus(reach))
                 if b.g.box(c) is not None and layout.index(c) == j]
    pool = list(cells)
    if not pool:
        raise ValueError(f"no trees in annulus {j}")
    out = []
    while len(out) < count:
        cell = rnd.choice(pool)
        c = rnd.randrange(4)
        s = b.four_r * Scalar(Fraction(rnd.randrange(1, 10 ** 6), 10 ** 6))
        pp = PhasePoint(cell, c, s)
        (x, y), side = b.chart_point(pp)
        if side != "C" and b.is_free(x, y, *b.dir.vector(c)) and not b.is_corner(x, y):
            out.append(pp)
    return out


# -- escape search ---------------------------------------------------------------

@dataclass
class EscapeSearchRecord:
    j: int
    depth: int
    levels: list  # per n = 1..depth: list of (lo, hi) IET intervals
    candidate: PhasePoint = None
    candidate_u: Scalar = None
    verified_no_return_steps: int = 0
    exits: int = 0
    dropped: int = 0
    pullback: list = field(default_factory=list)


def _nested(inner, outer):
    return all(any(c <= a and b <= d for c, d in outer) for a, b in inner)


def escape_search(g, direction, sizes, N_window, j, max_depth, step_bound, verify_config=None,
                  verify_steps=10 ** 4):
    """Interval approximations of the sets of points of annulus ``j`` that reach
    annulus ``j + n`` before coming back.

    The search runs on the IET of ``g`` inside the window ``N_window`` (which
    must be ringed there).  The deepest level's candidate is verified on
    ``verify_config`` (``g`` by default) by a forward run that must not return
    to annulus ``j`` for ``verify_steps`` steps.
    """
    layout = RingLayout(tuple(sorted(sizes)))
    table = build_table(g, N_window)
    ex = extract_iet(table, direction)
    T, charts = ex.iet, ex.charts
    comp_region = [layout.index(c.cell) for c in charts.components]
    start = [charts.interval(k) for k, reg in enumerate(comp_region) if reg == j]

    def region(u):
        return comp_region[T.component_index(u, side=1)]

    # fragments: (current lo, hi, accumulated shift, reached level, left yet)
    frags = [(a, e, Scalar(0), 0, False) for a, e in start]
    found = {n: [] for n in range(1, max_depth + 1)}
    dropped = 0
    for _ in range(step_bound):
        nxt = []
        for a, e, tau, reached, left in frags:
            for c, d, sh in T.split(a, e):
                c2, d2, t2 = c + sh, d + sh, tau + sh
                reg = region(c2)
                src = (c2 - t2, d2 - t2)
                if not left:
                    if reg == j:
                        nxt.append((c2, d2, t2, 0, False))
                    elif reg == j + 1:
                        found[1].append(src)
                        if max_depth > 1:
                            nxt.append((c2, d2, t2, 1, True))
                    continue
                if reg <= j:
                    continue
                r2 = max(reached, reg - j)
                if r2 > reached:
                    found[min(r2, max_depth)].append(src)
                    if r2 >= max_depth:
                        continue
                nxt.append((c2, d2, t2, r2, True))
        frags = nxt
        if not frags:
            break
    dropped = len(frags)

    levels = [sorted(found[n]) for n in range(1, max_depth + 1)]
    depth = 0
    for n, ivs in enumerate(levels, start=1):
        if ivs:
            depth = n
    rec = EscapeSearchRecord(j, depth, levels, dropped=dropped)
    if depth == 0:
        return rec
    b = Billiard(verify_config or g, direction)
    for lo, hi in sorted(levels[depth - 1], key=lambda iv: iv[0] - iv[1]):
        u = (lo + hi) / 2
        pp = charts.to_phase(u)
        steps = _no_return_steps(b, layout, pp, j, verify_steps)
        if rec.candidate is None or steps > rec.verified_no_return_steps:
            rec.candidate, rec.candidate_u, rec.verified_no_return_steps = pp, u, steps
        if steps >= verify_steps:
            break
    rec.pullback = _pullback_chain(b, layout, rec.candidate, j, depth, step_bound)
    return rec


def _pullback_chain(b, layout, pp, j, depth, step_bound):
    """For each ``n``: the first visit ``y`` of the candidate's orbit to annulus
    ``j + n`` and the point ``(S- R-)^n (y)`` (``None`` where undefined)."""
    chain = []
    cur = pp
    firsts = {}
    for _ in range(step_bound):
        idx = layout.index(cur.cell)
        if idx - j >= 1 and idx - j not in firsts:
            firsts[idx - j] = cur
        if len(firsts) >= depth:
            break
        cur = b.step(cur)
        if isinstance(cur, TrajectoryEvent):
            break
    for n in range(1, depth + 1):
        y = firsts.get(n)
        x = y
        for _ in range(n):
            if x is None:
                break
            r = passage_map(b, layout, x, "R-", step_bound)
            x = r.point if r.defined else None
            if x is None:
                break
            s_ = passage_map(b, layout, x, "S-", step_bound)
            x = s_.point if s_.defined else None
        chain.append((n, y, x))
    return chain


def _no_return_steps(b, layout, pp, j, limit, max_stay=10 ** 4):
    """Steps survived outside annulus ``j`` (and everything inside it) after first leaving it."""
    cur = pp
    for _ in range(max_stay):
        if layout.index(cur.cell) != j:
            break
        cur = b.step(cur)
        if isinstance(cur, TrajectoryEvent):
            return 0
    else:
        return 0
    for n in range(limit):
        if layout.index(cur.cell) <= j:
            return n
        cur = b.step(cur)
        if isinstance(cur, TrajectoryEvent):
            return n
    return limit

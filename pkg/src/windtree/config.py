"""Wind-tree configurations, rhombus cell sets and ring constructions.

Cell ``(i, j)`` is the unit square ``[i, i+1] x [j, j+1]``.  Its tree is the
closed square of half-side ``r`` centred at ``(i + a, j + b)``.  A
configuration stores finitely many explicit trees plus a rule for every
other cell; an explicit ``None`` means the cell is empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .exactnum import Scalar, as_scalar

__all__ = [
    "Cell",
    "TreeSpec",
    "Configuration",
    "cell_level",
    "cells_in_rhombus",
    "ring_cells",
    "rhombus_cells",
    "is_tactful",
    "is_ringed",
    "build_ringed",
    "build_nested_rings",
    "boundary_gaps",
    "trees_disjoint",
    "in_neighborhood",
    "config_to_json",
    "config_from_json",
    "load_config",
    "save_config",
]

HALF = Scalar(1) / 2
QUARTER = Scalar(1) / 4


class Cell(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class TreeSpec:
    """Tree centre offsets inside its unit cell."""

    a: Scalar
    b: Scalar

    def __post_init__(self):
        object.__setattr__(self, "a", as_scalar(self.a))
        object.__setattr__(self, "b", as_scalar(self.b))

    def fits(self, r, strict=False):
        lo, hi = r, 1 - r
        if strict:
            return lo < self.a < hi and lo < self.b < hi
        return lo <= self.a <= hi and lo <= self.b <= hi


CENTERED = TreeSpec(HALF, HALF)


@dataclass(frozen=True)
class Configuration:
    """A configuration: global half-side ``r``, explicit trees, default rule.

    ``default`` is ``"centered"``, ``"empty"`` or a ``TreeSpec`` replicated in
    every unlisted cell.
    """

    r: Scalar
    explicit: dict = field(default_factory=dict)
    default: object = "centered"
    _boxes: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        r = as_scalar(self.r)
        object.__setattr__(self, "r", r)
        if not (QUARTER <= r < HALF):
            raise ValueError(f"half-side r={r} outside [1/4, 1/2)")
        exp = {}
        for c, t in dict(self.explicit).items():
            c = Cell(*c)
            if t is not None and not isinstance(t, TreeSpec):
                t = TreeSpec(*t)
            if t is not None and not t.fits(r):
                raise ValueError(f"tree in cell {tuple(c)} leaves its cell for r={r}")
            exp[c] = t
        object.__setattr__(self, "explicit", exp)
        if isinstance(self.default, TreeSpec):
            if not self.default.fits(r):
                raise ValueError("default tree leaves its cell")
        elif self.default not in ("centered", "empty"):
            raise ValueError(f"unknown default rule {self.default!r}")
        self.radicand  # validates that all scalars share one field

    def __hash__(self):
        return hash((self.r, tuple(sorted(self.explicit.items(), key=lambda kv: kv[0])), str(self.default)))

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (self.r, self.explicit, self.default) == (other.r, other.explicit, other.default)

    @property
    def radicand(self):
        d = self.r.d
        vals = [t.a for t in self.explicit.values() if t] + [t.b for t in self.explicit.values() if t]
        if isinstance(self.default, TreeSpec):
            vals += [self.default.a, self.default.b]
        for v in vals:
            if v.d and d and v.d != d:
                raise ValueError("configuration mixes quadratic fields")
            d = d or v.d
        return d

    def tree(self, cell):
        """TreeSpec of ``cell`` or ``None`` if empty."""
        cell = Cell(*cell)
        if cell in self.explicit:
            return self.explicit[cell]
        if self.default == "centered":
            return CENTERED
        if self.default == "empty":
            return None
        return self.default

    def box(self, cell):
        """Closed tree square ``(x1, x2, y1, y2)`` or ``None``."""
        bx = self._boxes.get(cell)
        if bx is None and cell not in self._boxes:
            t = self.tree(cell)
            if t is None:
                bx = None
            else:
                i, j = cell
                cx, cy = t.a + i, t.b + j
                bx = (cx - self.r, cx + self.r, cy - self.r, cy + self.r)
            self._boxes[cell] = bx
        return bx

    def center(self, cell):
        t = self.tree(cell)
        if t is None:
            return None
        return (t.a + cell[0], t.b + cell[1])

    def replace(self, updates):
        """New configuration with some cells overridden (``None`` empties)."""
        exp = dict(self.explicit)
        for c, t in updates.items():
            exp[Cell(*c)] = t
        return Configuration(self.r, exp, self.default)

    def moved(self, cell, dx, dy):
        t = self.tree(cell)
        return self.replace({cell: TreeSpec(t.a + dx, t.b + dy)})

    def without(self, cell):
        return self.replace({cell: None})


def cell_level(i, j):
    """``max(|i|,|i+1|) + max(|j|,|j+1|)``.

    The cell lies in the rhombus of size ``N`` exactly when this is at most ``N``.
    """
    return max(abs(i), abs(i + 1)) + max(abs(j), abs(j + 1))


def _check_n(N, minimum=2):
    if int(N) != N or N < minimum:
        raise ValueError(f"rhombus size must be an integer >= {minimum}, got {N}")
    return int(N)


def cells_in_rhombus(N):
    """Cells whose interior lies in ``|x|+|y| <= N + 1/2``."""
    N = _check_n(N)
    return {Cell(i, j) for i in range(-N, N) for j in range(-N, N) if cell_level(i, j) <= N}


def _quadrant_signs(cell):
    return (1 if cell[0] >= 0 else -1, 1 if cell[1] >= 0 else -1)


def _corner_values(cell):
    i, j = cell
    sx, sy = _quadrant_signs(cell)
    out = []
    for cx in (i, i + 1):
        for cy in (j, j + 1):
            out.append(((cx, cy), sx * cx + sy * cy))
    return out


def ring_cells(N):
    """Cells whose interior meets the curve ``|x|+|y| = N + 1/2``."""
    N = _check_n(N, 1)
    c = Scalar(2 * N + 1) / 2
    out = set()
    for i in range(-N - 1, N + 1):
        for j in range(-N - 1, N + 1):
            vals = [v for _, v in _corner_values((i, j))]
            if min(vals) < c < max(vals):
                out.add(Cell(i, j))
    return out


def rhombus_cells(N):
    """Cells whose closed square meets the closed rhombus of size ``N``."""
    return cells_in_rhombus(N) | ring_cells(N)


def _lone_corner(cell, c):
    below = [(p, v) for p, v in _corner_values(cell) if v < c]
    above = [(p, v) for p, v in _corner_values(cell) if v > c]
    return below[0][0] if len(below) == 1 else above[0][0]


def is_tactful(g, N):
    """Every tree of a cell meeting the closed rhombus is strictly inside its cell."""
    N = _check_n(N)
    for cell in rhombus_cells(N):
        t = g.tree(cell)
        if t is not None and not t.fits(g.r, strict=True):
            return False
    return True


def _edge_cover_intervals(g, N, sx, sy):
    c = Scalar(2 * N + 1) / 2
    spans = []
    for i in range(-N - 2, N + 2):
        for j in range(-N - 2, N + 2):
            bx = g.box((i, j))
            if bx is None:
                continue
            x1, x2, y1, y2 = bx
            xs = sorted((sx * x1, sx * x2))
            ys = sorted((sy * y1, sy * y2))
            lo = max(xs[0], c - ys[1], Scalar(0))
            hi = min(xs[1], c - ys[0], c)
            if lo <= hi:
                spans.append((lo, hi))
    return c, sorted(spans, key=lambda s: (s[0], s[1]))


def boundary_gaps(g, N):
    """Uncovered pieces of ``|x|+|y| = N+1/2`` as ``(sx, sy, lo, hi)`` in ``|x|``."""
    gaps = []
    for sx in (1, -1):
        for sy in (1, -1):
            c, spans = _edge_cover_intervals(g, N, sx, sy)
            reach = Scalar(0)
            for lo, hi in spans:
                if lo > reach:
                    gaps.append((sx, sy, reach, lo))
                if hi > reach:
                    reach = hi
            if reach < c:
                gaps.append((sx, sy, reach, c))
    return gaps


def is_ringed(g, N):
    """Tactful on the cells inside the rhombus and the boundary curve covered."""
    N = _check_n(N)
    for cell in cells_in_rhombus(N):
        t = g.tree(cell)
        if t is not None and not t.fits(g.r, strict=True):
            return False
    return not boundary_gaps(g, N)


def _corner_spec(cell, N, r, shrink=0):
    cx, cy = _lone_corner(cell, Scalar(2 * N + 1) / 2)
    i, j = cell
    a = r + shrink if cx == i else 1 - r - shrink
    b = r + shrink if cy == j else 1 - r - shrink
    return TreeSpec(a, b)


def build_ringed(N, r, interior="centered"):
    """Ring of trees covering ``|x|+|y| = N+1/2`` around the given interior.

    Each crossed cell gets a tree pushed into the cell corner that the curve
    cuts off; for ``r = 1/4`` the tree diagonal lies on the curve.
    ``interior`` is ``"centered"`` or a mapping cell -> TreeSpec for cells of
    the rhombus.
    """
    N = _check_n(N)
    r = as_scalar(r)
    if not (QUARTER <= r < HALF):
        raise ValueError(f"half-side r={r} outside [1/4, 1/2)")
    exp = {}
    if interior != "centered":
        for c, t in dict(interior).items():
            c = Cell(*c)
            if c not in cells_in_rhombus(N):
                raise ValueError(f"cell {tuple(c)} is not inside the rhombus")
            exp[c] = t
    for cell in ring_cells(N):
        spec = _corner_spec(cell, N, r)
        if not spec.fits(r):
            raise ValueError(f"ring tree does not fit in cell {tuple(cell)}")
        exp[cell] = spec
    return Configuration(r, exp, "centered")


def build_nested_rings(sizes, r, shrink, outer=None):
    """Several concentric rings, each loosened by moving trees ``shrink`` inward.

    A positive ``shrink`` opens thin channels between consecutive ring trees.
    If ``outer`` is given, an exact (closed) ring of that size is added.
    """
    r = as_scalar(r)
    shrink = as_scalar(shrink)
    sizes = sorted(int(n) for n in sizes)
    exp = {}
    taken = set()
    for n in sizes + ([outer] if outer else []):
        cells = ring_cells(n)
        if cells & taken:
            raise ValueError("rings overlap; use sizes at least two apart")
        taken |= cells
        s = 0 if n == outer else shrink
        for cell in cells:
            exp[cell] = _corner_spec(cell, n, r, s)
    if outer is not None and sizes and outer <= sizes[-1] + 1:
        raise ValueError("outer ring must enclose the other rings")
    return Configuration(r, exp, "centered")


def trees_disjoint(g, window):
    """No two closed trees in ``window`` touch or overlap."""
    cells = sorted(set(Cell(*c) for c in window))
    cs = set(cells)
    for c in cells:
        b1 = g.box(c)
        if b1 is None:
            continue
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                o = Cell(c.i + di, c.j + dj)
                if o <= c or o not in cs:
                    continue
                b2 = g.box(o)
                if b2 is None:
                    continue
                if b1[0] <= b2[1] and b2[0] <= b1[1] and b1[2] <= b2[3] and b2[2] <= b1[3]:
                    return False
    return True


def in_neighborhood(g, f, N, eps):
    """Membership of ``g`` in the open cylinder set of radius ``eps`` around ``f``."""
    eps = as_scalar(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    e2 = eps * eps
    for cell in cells_in_rhombus(N):
        tg, tf = g.tree(cell), f.tree(cell)
        if tg is None or tf is None:
            if tg is not tf:
                return False
            continue
        if not tg.fits(g.r, strict=True):
            return False
        da, db = tg.a - tf.a, tg.b - tf.b
        if not (da * da + db * db < e2):
            return False
    return True


# -- serialization ----------------------------------------------------------

def config_to_json(g):
    d = g.radicand
    out = {"r": str(g.r)}
    if d:
        out["radicand"] = d
    if isinstance(g.default, TreeSpec):
        out["default"] = {"a": str(g.default.a), "b": str(g.default.b)}
    else:
        out["default"] = g.default
    trees = []
    for c in sorted(g.explicit):
        t = g.explicit[c]
        if t is None:
            trees.append({"i": c.i, "j": c.j, "empty": True})
        else:
            trees.append({"i": c.i, "j": c.j, "a": str(t.a), "b": str(t.b)})
    out["trees"] = trees
    return json.dumps(out, indent=2) + "\n"


class ConfigError(ValueError):
    pass


def config_from_json(text):
    from .exactnum import parse_scalar

    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}: {e.msg}") from None
    if not isinstance(obj, dict) or "r" not in obj:
        raise ConfigError("field 'r' is required")

    def num(v, where):
        try:
            return parse_scalar(str(v))
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from None

    r = num(obj["r"], "r")
    rad = obj.get("radicand", 0)
    default = obj.get("default", "centered")
    if isinstance(default, dict):
        default = TreeSpec(num(default.get("a"), "default.a"), num(default.get("b"), "default.b"))
    exp = {}
    for k, t in enumerate(obj.get("trees", [])):
        try:
            c = Cell(int(t["i"]), int(t["j"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"trees[{k}]: integer fields 'i' and 'j' required") from None
        if t.get("empty"):
            exp[c] = None
            continue
        spec = TreeSpec(num(t.get("a"), f"trees[{k}].a"), num(t.get("b"), f"trees[{k}].b"))
        exp[c] = spec
    try:
        g = Configuration(r, exp, default)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if rad and g.radicand and g.radicand != rad:
        raise ConfigError(f"scalars use sqrt({g.radicand}) but radicand is {rad}")
    return g


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return config_from_json(fh.read())


def save_config(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_json(g))

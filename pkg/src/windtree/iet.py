"""Interval exchange transformations with the stop-at-singularity convention.

The domain ``X`` is a finite union of open intervals with disjoint closures.
``T`` translates each piece; points that are not inside a piece form
``sing_forward`` and points of ``X`` missed by every image piece form
``sing_backward``.  Orbits stop when they reach one of these sets.

Coverage certificates are built from a Kakutani tower over the seed
interval: every point of the seed is followed until its first return, which
splits the seed into finitely many columns ``(J, h)``.  A point on floor
``a`` of a column is covered by ``T^k(I)``, ``K <= k <= L``, exactly when
``a <= L`` or ``h - a <= -K``; this turns the search for the smallest window
into a sweep over column heights.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .exactnum import Scalar, as_scalar, parse_scalar

__all__ = [
    "Piece",
    "Column",
    "EligibleIET",
    "ConnectionRecord",
    "CoverageCertificate",
    "KeaneVerdict",
    "iet_apply",
    "image_of_interval",
    "find_connections",
    "is_irreducible",
    "coverage_certificate",
    "verify_certificate",
    "keane_check",
    "first_return",
    "check_axioms",
    "rotation",
    "iet_from_lengths",
    "iet_to_json",
    "iet_from_json",
    "certificate_to_json",
    "certificate_from_json",
]


class Piece(NamedTuple):
    lo: Scalar
    hi: Scalar
    shift: Scalar

    @property
    def image(self):
        return (self.lo + self.shift, self.hi + self.shift)


def _merge_points(points):
    out = sorted(set(points))
    return tuple(out)


class EligibleIET:
    """A piecewise translation of a finite union of open intervals."""

    def __init__(self, components, pieces, check=True):
        comps = sorted((as_scalar(a), as_scalar(b)) for a, b in components)
        ps = sorted(
            (Piece(as_scalar(p[0]), as_scalar(p[1]), as_scalar(p[2])) for p in pieces),
            key=lambda p: p.lo,
        )
        self.components = tuple(comps)
        self.pieces = tuple(ps)
        self._clo = [c[0] for c in comps]
        self._plo = [p.lo for p in ps]
        self._images = sorted(ps, key=lambda p: p.lo + p.shift)
        self._ilo = [p.lo + p.shift for p in self._images]
        self.sing_forward = self._uncovered([(p.lo, p.hi) for p in ps])
        self.sing_backward = self._uncovered([p.image for p in self._images])
        if check:
            self._validate()

    # -- construction helpers ----------------------------------------------
    def _uncovered(self, intervals):
        """Points of X between consecutive intervals (intervals must tile X)."""
        pts = []
        for lo, hi in intervals:
            if self.in_domain(lo):
                pts.append(lo)
            if self.in_domain(hi):
                pts.append(hi)
        return _merge_points(pts)

    def _validate(self):
        for a, b in self.components:
            if not a < b:
                raise ValueError("empty component")
        for (a, b), (c, d) in zip(self.components, self.components[1:]):
            if not b < c:
                raise ValueError("component closures overlap")
        for label, ivs in (("pieces", [(p.lo, p.hi) for p in self.pieces]),
                           ("images", [p.image for p in self._images])):
            ivs = sorted(ivs)
            for (a, b), (c, d) in zip(ivs, ivs[1:]):
                if c < b:
                    raise ValueError(f"{label} overlap")
            for a, b in ivs:
                k = self.component_index(a, side=1)
                if k is None or b > self.components[k][1]:
                    raise ValueError(f"{label} leave the domain")
            total = sum((b - a for a, b in ivs), Scalar(0))
            if total != self.measure:
                raise ValueError(f"{label} do not tile the domain")

    @property
    def radicand(self):
        for a, b in self.components:
            for v in (a, b):
                if v.d:
                    return v.d
        for p in self.pieces:
            if p.shift.d:
                return p.shift.d
        return 0

    @property
    def measure(self):
        return sum((b - a for a, b in self.components), Scalar(0))

    def component_index(self, x, side=0):
        """Index of the component containing ``x`` (or ``x`` from one side)."""
        k = bisect_right(self._clo, x) - 1
        if k < 0:
            return None
        a, b = self.components[k]
        if side > 0:
            ok = a <= x < b
        elif side < 0:
            ok = a < x <= b
        else:
            ok = a < x < b
        return k if ok else None

    def in_domain(self, x):
        return self.component_index(x) is not None

    # -- the map ------------------------------------------------------------
    def _piece_at(self, x, side, backward):
        keys = self._ilo if backward else self._plo
        lst = self._images if backward else self.pieces
        k = bisect_right(keys, x) - 1
        if side < 0 and k >= 0 and keys[k] == x:
            k -= 1
        if k < 0:
            return None
        p = lst[k]
        lo = keys[k]
        hi = lo + (p.hi - p.lo)
        if side > 0:
            return p if lo <= x < hi else None
        if side < 0:
            return p if lo < x <= hi else None
        return p if lo < x < hi else None

    def apply(self, x, backward=False):
        """``T(x)`` (or ``T^-1(x)``); ``None`` on the singular set."""
        p = self._piece_at(x, 0, backward)
        if p is not None:
            return x - p.shift if backward else x + p.shift
        if not self.in_domain(x):
            raise ValueError(f"point {x} not in domain")
        return None

    def apply_side(self, x, side, backward=False):
        """Image of the one-sided point ``x+`` (side 1) or ``x-`` (side -1)."""
        p = self._piece_at(x, side, backward)
        if p is None:
            return None
        return x - p.shift if backward else x + p.shift

    def iterate(self, x, n):
        """``T^n(x)`` for any integer ``n``, or ``None`` if undefined."""
        back = n < 0
        for _ in range(abs(n)):
            x = self.apply(x, backward=back)
            if x is None:
                return None
        return x

    def split(self, a, b, backward=False):
        """Sub-intervals of ``(a, b)`` on which ``T`` (or its inverse) translates."""
        keys = self._ilo if backward else self._plo
        lst = self._images if backward else self.pieces
        k = max(bisect_right(keys, a) - 1, 0)
        out = []
        while k < len(lst) and keys[k] < b:
            p = lst[k]
            lo = keys[k]
            hi = lo + (p.hi - p.lo)
            c = a if a > lo else lo
            d = b if b < hi else hi
            if c < d:
                out.append((c, d, -p.shift if backward else p.shift))
            k += 1
        return out

    def image(self, J, k=1):
        cur = [(as_scalar(J[0]), as_scalar(J[1]))]
        back = k < 0
        for _ in range(abs(k)):
            nxt = []
            for a, b in cur:
                for c, d, sh in self.split(a, b, backward=back):
                    nxt.append((c + sh, d + sh))
            cur = sorted(nxt)
        return cur

    def __eq__(self, other):
        return (isinstance(other, EligibleIET) and self.components == other.components
                and self.pieces == other.pieces)

    def __hash__(self):
        return hash((self.components, self.pieces))

    def __repr__(self):
        return f"EligibleIET({len(self.components)} components, {len(self.pieces)} pieces)"


def iet_apply(T, x, direction="forward"):
    return T.apply(as_scalar(x), backward=(direction == "backward"))


def image_of_interval(T, J, k):
    return T.image(J, k)


def rotation(alpha, length=1):
    """Two-piece exchange of ``(0, length)`` cut at ``alpha``: the pieces swap places."""
    alpha, length = as_scalar(alpha), as_scalar(length)
    return EligibleIET([(0, length)], [(0, alpha, length - alpha), (alpha, length, -alpha)])


def iet_from_lengths(lengths, perm):
    """Standard one-component IET: piece ``i`` lands in position ``perm[i]``."""
    lengths = [as_scalar(x) for x in lengths]
    n = len(lengths)
    order = sorted(range(n), key=lambda i: perm[i])
    tops, pos = {}, Scalar(0)
    for i in order:
        tops[i] = pos
        pos = pos + lengths[i]
    pieces, x = [], Scalar(0)
    for i in range(n):
        pieces.append((x, x + lengths[i], tops[i] - x))
        x = x + lengths[i]
    return EligibleIET([(0, x)], pieces)


# -- connections --------------------------------------------------------------

@dataclass(frozen=True)
class ConnectionRecord:
    """Finite orbit from a backward-undefined to a forward-undefined point.

    ``kind`` tells which ends are genuine singularities and which are
    adjoined marker points (``genuine``, ``mixed`` or ``dyadic``).
    """

    orbit: tuple
    length: int
    kind: str = "genuine"


def find_connections(T, max_steps):
    """Forward orbits of backward-singular points that end on a forward singularity.

    ``length`` counts the points of the orbit.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    fwd = set(T.sing_forward)
    out = []
    for s in T.sing_backward:
        orbit = [s]
        x = s
        for _ in range(max_steps):
            if x in fwd:
                out.append(ConnectionRecord(tuple(orbit), len(orbit)))
                break
            x = T.apply(x)
            orbit.append(x)
    return out


def is_irreducible(T):
    """No proper nonempty union of components is invariant."""
    n = len(T.components)
    if n <= 1:
        return True
    adj = [set() for _ in range(n)]
    for p in T.pieces:
        a = T.component_index((p.lo + p.hi) / 2)
        b = T.component_index((p.lo + p.hi) / 2 + p.shift)
        adj[a].add(b)
    radj = [set() for _ in range(n)]
    for a in range(n):
        for b in adj[a]:
            radj[b].add(a)

    def reach(g):
        seen, stack = {0}, [0]
        while stack:
            v = stack.pop()
            for w in g[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    return reach(adj) and reach(radj)


# -- towers and coverage --------------------------------------------------------

class Column(NamedTuple):
    """Points of ``base`` (inside the seed) first return to the seed after ``height`` steps.

    ``levels`` lists the floors lying in the target components when the
    tower was built against a set of components.
    """

    base: tuple
    height: int
    shift: Scalar
    levels: tuple = None


def _tower(T, I, max_height, comps=None):
    a0, b0 = I
    start = () if comps is None or T.component_index(a0, side=1) not in comps else (0,)
    frags = [(a0, b0, Scalar(0), start)]
    cols = []
    for h in range(1, max_height + 1):
        nxt = []
        for a, b, tau, lv in frags:
            for c, d, sh in T.split(a, b):
                c2, d2, t2 = c + sh, d + sh, tau + sh
                if d2 <= a0 or c2 >= b0:
                    if comps is not None and T.component_index(c2, side=1) in comps:
                        nxt.append((c2, d2, t2, lv + (h,)))
                    else:
                        nxt.append((c2, d2, t2, lv))
                    continue
                lo = c2 if c2 > a0 else a0
                hi = d2 if d2 < b0 else b0
                cols.append(Column((lo - t2, hi - t2), h, t2, lv if comps is not None else None))
                if c2 < a0 or d2 > b0:
                    inside = comps is not None and T.component_index(c2 if c2 < a0 else b0, side=1) in comps
                    lv2 = lv + (h,) if inside else lv
                    if c2 < a0:
                        nxt.append((c2, a0, t2, lv2))
                    if d2 > b0:
                        nxt.append((b0, d2, t2, lv2))
        frags = nxt
        if not frags:
            return sorted(cols, key=lambda c: c.base[0]), True
    return sorted(cols, key=lambda c: c.base[0]), False


def _floors(T, col):
    """Floors ``T^a(base)`` of a column, as intervals."""
    lo, hi = col.base
    mid = (lo + hi) / 2
    x = mid
    out = [(lo, hi)]
    for _ in range(1, col.height):
        x = T.apply(x)
        d = x - mid
        out.append((lo + d, hi + d))
    return out


def _overlap(iv, targets):
    a, b = iv
    tot = Scalar(0)
    for c, d in targets:
        lo = a if a > c else c
        hi = b if b < d else d
        if lo < hi:
            tot = tot + (hi - lo)
    return tot


def _subtract(targets, covers):
    """Parts of the target intervals not covered by the (disjoint) covers."""
    gaps = []
    covers = sorted(covers)
    for c, d in targets:
        x = c
        for a, b in covers:
            if b <= x or a >= d:
                continue
            if a > x:
                gaps.append((x, a))
            if b > x:
                x = b
        if x < d:
            gaps.append((x, d))
    return gaps


@dataclass
class CoverageCertificate:
    """Outcome of a coverage search for the seed interval ``seed``.

    ``columns`` describe the first-return tower over the seed; the floors
    used at each ``k`` in ``[K, L]`` are produced by ``image_tree``.
    """

    seed: tuple
    K: int
    L: int
    covered: bool
    columns: list
    target: list
    step_bound: int
    exhausted: bool = False
    gaps: list = field(default_factory=list)
    periodic: bool = False

    def floor_levels(self):
        """``(column index, floor, k)`` with ``k`` the exponent covering that floor."""
        for i, col in enumerate(self.columns):
            for a in range(col.height):
                if a <= self.L:
                    yield i, a, a
                elif col.height - a <= -self.K:
                    yield i, a, a - col.height

    def image_tree(self, T):
        """Map ``k -> [intervals]`` of recorded pieces of ``T^k(seed)``."""
        tree = {}
        for i, col in enumerate(self.columns):
            floors = _floors(T, col)
            for a, iv in enumerate(floors):
                if a <= self.L:
                    tree.setdefault(a, []).append(iv)
                elif col.height - a <= -self.K:
                    tree.setdefault(a - col.height, []).append(iv)
        return {k: sorted(v) for k, v in sorted(tree.items())}


def coverage_certificate(T, I, step_bound, target=None):
    """Smallest window ``[K, L]`` with ``union T^k(I) = target`` up to finitely many points.

    ``target`` defaults to the whole domain.  The window minimises ``L - K``;
    ties go to the largest negative ``K``.
    """
    I = (as_scalar(I[0]), as_scalar(I[1]))
    if not I[0] < I[1]:
        raise ValueError("empty seed interval")
    targets = list(T.components) if target is None else sorted(target)
    comps = None
    if target is not None:
        idx = [T.component_index((a + b) / 2) for a, b in targets]
        if all(k is not None and T.components[k] == iv for k, iv in zip(idx, targets)):
            comps = frozenset(idx)
    cols, done = _tower(T, I, step_bound + 1, comps)
    periodic = any(c.shift == 0 for c in cols)
    if not done:
        return CoverageCertificate(I, 0, 0, False, cols, targets, step_bound,
                                   exhausted=True, periodic=periodic)
    full_target = target is None
    relevant, covered_measure, all_floors = [], Scalar(0), []
    for col in cols:
        if full_target:
            relevant.append(None)
            covered_measure = covered_measure + (col.base[1] - col.base[0]) * col.height
            continue
        if comps is not None:
            relevant.append(list(col.levels))
            covered_measure = covered_measure + (col.base[1] - col.base[0]) * len(col.levels)
            continue
        levels = []
        for a, iv in enumerate(_floors(T, col)):
            m = _overlap(iv, targets)
            if m:
                levels.append(a)
                covered_measure = covered_measure + m
                all_floors.append(iv)
        relevant.append(levels)
    tmeasure = sum((b - a for a, b in targets), Scalar(0))
    if covered_measure != tmeasure:
        if sum(c.height for c in cols) <= 10 ** 6:
            all_floors = []
            for col, lv in zip(cols, relevant):
                fl = _floors(T, col)
                all_floors.extend(fl if lv is None else [fl[a] for a in lv])
        gaps = _subtract(targets, all_floors) if all_floors else []
        return CoverageCertificate(I, 0, 0, False, cols, targets, step_bound,
                                   gaps=gaps, periodic=periodic)

    def top_level(i, M):
        col = cols[i]
        cap = col.height - M - 1
        if cap < 0:
            return -1
        levels = relevant[i]
        if levels is None:
            return cap
        j = bisect_right(levels, cap) - 1
        return levels[j] if j >= 0 else -1

    hmax = max(c.height for c in cols)
    best = None
    for M in range(0, hmax + 1):
        L = max(0, max(top_level(i, M) for i in range(len(cols))))
        cost = L + M
        if best is None or cost < best[0] or (cost == best[0] and best[1] == 0 and M > 0):
            best = (cost, M, L)
    cost, M, L = best
    ok = cost <= step_bound
    return CoverageCertificate(I, -M, L, ok, cols, targets, step_bound, periodic=periodic)


def verify_certificate(T, cert):
    """Independent replay: every column base travels as one interval back into the seed,
    and the floors used by the window cover the target measure."""
    if not cert.covered:
        return False
    a0, b0 = cert.seed
    shifts = [p.shift for p in T.pieces]
    used = []
    for col in cert.columns:
        c, d = col.base
        w = d - c
        # a floor starting at c fits in piece k iff c <= hi_k - w
        last = [p.hi - w for p in T.pieces]
        for a in range(col.height):
            if a <= cert.L or col.height - a <= -cert.K:
                used.append((c, c + w))
            k = bisect_right(T._plo, c) - 1
            if k < 0 or last[k] < c:
                return False  # the floor straddles a cut
            c = c + shifts[k]
        if not (a0 <= c and c + w <= b0):
            return False
    if not _sorted_disjoint(used):
        return False
    tmeasure = sum((b - a for a, b in cert.target), Scalar(0))
    return _covered_measure(used, sorted(cert.target)) == tmeasure


def _sorted_disjoint(ivs):
    """Sort in place and check the intervals are pairwise disjoint.

    The float key orders almost everything; the exact pass confirms it and falls back to an
    exact sort when two endpoints are too close for floats.
    """
    ivs.sort(key=lambda iv: iv[0].approx()[0])
    if any(ivs[i + 1][0] < ivs[i][0] for i in range(len(ivs) - 1)):
        ivs.sort()
    return all(not (c < b) for (a, b), (c, d) in zip(ivs, ivs[1:]))


def _covered_measure(ivs, targets):
    """Measure of the union of sorted disjoint ``ivs`` inside sorted disjoint ``targets``."""
    tot = Scalar(0)
    j = 0
    for a, b in ivs:
        while j < len(targets) and not (a < targets[j][1]):
            j += 1
        k = j
        while k < len(targets) and targets[k][0] < b:
            c, d = targets[k]
            lo = a if a > c else c
            hi = b if b < d else d
            if lo < hi:
                tot = tot + (hi - lo)
            k += 1
    return tot


# -- Keane ------------------------------------------------------------------------

@dataclass
class KeaneVerdict:
    kind: str  # minimal_certified | periodic_found | reducible | connection_found | inconclusive
    windows: list = field(default_factory=list)
    connections: list = field(default_factory=list)
    certificates: list = field(default_factory=list)


def default_basis(T):
    """Both halves of every piece."""
    out = []
    for p in T.pieces:
        m = (p.lo + p.hi) / 2
        out.append((p.lo, m))
        out.append((m, p.hi))
    return out


def _periodic_point(T, step_bound):
    for p in T.pieces:
        x0 = (p.lo + p.hi) / 2
        x = x0
        for _ in range(step_bound):
            x = T.apply(x)
            if x is None:
                break
            if x == x0:
                return x0
    return None


def keane_check(T, step_bound, basis=None):
    """Reducibility, then periodic points, then connections, then coverage of a basis.

    Connections found within the bound are attached to every verdict.
    """
    if not is_irreducible(T):
        return KeaneVerdict("reducible")
    conns = find_connections(T, step_bound)
    if _periodic_point(T, step_bound) is not None:
        return KeaneVerdict("periodic_found", connections=conns)
    if conns:
        return KeaneVerdict("connection_found", connections=conns)
    verdict = KeaneVerdict("minimal_certified")
    for I in basis or default_basis(T):
        cert = coverage_certificate(T, I, step_bound)
        verdict.certificates.append(cert)
        if cert.periodic:
            return KeaneVerdict("periodic_found", certificates=verdict.certificates)
        if not cert.covered:
            verdict.kind = "inconclusive"
            return verdict
        verdict.windows.append((I, cert.K, cert.L))
    return verdict


def first_return(T, x, I, step_bound, side=None):
    """Least ``k >= 1`` with ``T^k(x) in I`` for an endpoint ``x`` of ``I``.

    The orbit is one-sided, following the points of ``I`` next to ``x``.
    """
    x = as_scalar(x)
    a, b = as_scalar(I[0]), as_scalar(I[1])
    if side is None:
        side = 1 if x == a else -1
    y = x
    for k in range(1, step_bound + 1):
        y = T.apply_side(y, side)
        if y is None:
            return None
        if (side > 0 and a <= y < b) or (side < 0 and a < y <= b):
            return k
    return None


def check_axioms(T, samples=()):
    """Sing(T^-1) equals X minus T(X minus Sing(T)) and T^-1 T = id on samples."""
    images = sorted(p.image for p in T.pieces)
    missed = set()
    for lo, hi in images:
        for v in (lo, hi):
            if T.in_domain(v) and not any(c < v < d for c, d in images):
                missed.add(v)
    if tuple(sorted(missed)) != T.sing_backward:
        return False
    for x in samples:
        y = T.apply(x)
        if y is not None and T.apply(y, backward=True) != x:
            return False
        z = T.apply(x, backward=True)
        if z is not None and T.apply(z) != x:
            return False
    return True


# -- serialization ------------------------------------------------------------------

def iet_to_json(T, extra=None):
    data = {
        "radicand": T.radicand,
        "components": [[str(a), str(b)] for a, b in T.components],
        "pieces": [[str(p.lo), str(p.hi), str(p.shift)] for p in T.pieces],
    }
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2) + "\n"


def iet_from_json(text):
    data = json.loads(text)
    return EligibleIET([tuple(c) for c in data["components"]], [tuple(p) for p in data["pieces"]])


def certificate_to_json(T, cert, full_tree=True):
    data = {
        "seed": [str(cert.seed[0]), str(cert.seed[1])],
        "K": cert.K,
        "L": cert.L,
        "covered": cert.covered,
        "exhausted": cert.exhausted,
        "step_bound": cert.step_bound,
        "columns": [
            {"base": [str(c.base[0]), str(c.base[1])], "height": c.height, "shift": str(c.shift)}
            for c in cert.columns
        ],
        "gaps": [[str(a), str(b)] for a, b in cert.gaps],
        "target": [[str(a), str(b)] for a, b in cert.target],
    }
    if full_tree and cert.covered:
        data["image_tree"] = {
            str(k): [[str(a), str(b)] for a, b in v] for k, v in cert.image_tree(T).items()
        }
    return json.dumps(data, indent=2) + "\n"


def certificate_from_json(data):
    """Inverse of ``certificate_to_json`` (accepts text or a parsed mapping)."""
    if isinstance(data, str):
        data = json.loads(data)

    def iv(pair):
        return (parse_scalar(pair[0]), parse_scalar(pair[1]))

    cols = [Column(iv(c["base"]), int(c["height"]), parse_scalar(c["shift"])) for c in data["columns"]]
    return CoverageCertificate(
        iv(data["seed"]), int(data["K"]), int(data["L"]), bool(data["covered"]), cols,
        [iv(t) for t in data.get("target", [])], int(data["step_bound"]),
        bool(data.get("exhausted", False)), [iv(g) for g in data.get("gaps", [])],
    )

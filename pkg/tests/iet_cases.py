"""Generators of interval exchanges with known structure, shared by several tests."""

import random
from fractions import Fraction

from windtree.exactnum import Scalar
from windtree.iet import EligibleIET, find_connections, iet_from_lengths

SQRT2 = Scalar(0, 1, 2)


def three_iet(l1, l2):
    """(321) exchange of (0, 1) with lengths l1, l2, 1 - l1 - l2."""
    return iet_from_lengths([l1, l2, 1 - l1 - l2], (3, 2, 1))


def random_quadratic(rnd, lo, hi):
    """Random element of Q(sqrt 2) in (lo, hi) with a nonzero radical part."""
    while True:
        b = Fraction(rnd.randrange(1, 200), rnd.randrange(200, 400)) * rnd.choice((-1, 1))
        a = Fraction(rnd.randrange(0, 1000), 1000)
        x = Scalar(a, b, 2)
        if lo < x < hi:
            return x


def random_connectionless(seed, count, max_steps=10 ** 4):
    """``count`` (321) exchanges over Q(sqrt 2) with no connection up to ``max_steps``."""
    rnd = random.Random(seed)
    out = []
    while len(out) < count:
        l1 = random_quadratic(rnd, Scalar(Fraction(1, 10)), Scalar(Fraction(1, 2)))
        l2 = random_quadratic(rnd, Scalar(Fraction(1, 10)), 1 - l1 - Fraction(1, 10))
        T = three_iet(l1, l2)
        if not find_connections(T, max_steps):
            out.append(T)
    return out


# affine data of the (321) exchange as functions of l1 (l2 fixed): value = c0 + c1*l1
def _shift(i, l2):
    return [(Scalar(1), -1), (1 - l2, -2), (-l2, -1)][i]


def _backward_cuts(l2):
    return [(1 - l2, -1), (Scalar(1), -1)]  # l3, l3 + l2


def _forward_cuts(l2):
    return [(Scalar(0), 1), (l2, 1)]  # l1, l1 + l2


def has_periodic_piece(T, steps=2000):
    for p in T.pieces:
        x0 = x = (p.lo + p.hi) / 2
        for _ in range(steps):
            x = T.apply(x)
            if x is None:
                break
            if x == x0:
                return True
    return False


def engineered_connection(length, seed, l2=None, tries=4000, aperiodic=False):
    """A (321) exchange whose backward cut reaches a forward cut after ``length - 1`` steps.

    For a trial ``l1`` the itinerary of the backward cut is read off; along
    that itinerary the endpoint is affine in ``l1``, so the parameter making
    it hit a forward cut solves one linear equation.  The candidate is kept
    when the scanner reports a connection of exactly ``length`` points
    (and, with ``aperiodic``, no piece midpoint is periodic).  Returns ``(T, start, end)``.
    """
    rnd = random.Random(seed)
    l2 = l2 if l2 is not None else SQRT2 / 7
    for _ in range(tries):
        l1 = Scalar(Fraction(rnd.randrange(1, 10 ** 4), 10 ** 4)) * (1 - l2)
        T = three_iet(l1, l2)
        for bi, (b0, b1) in enumerate(_backward_cuts(l2)):
            y = b0 + b1 * l1
            c0, c1 = b0, Scalar(b1)
            ok = True
            for _ in range(length - 1):
                k = next((i for i, p in enumerate(T.pieces) if p.lo < y < p.hi), None)
                if k is None:
                    ok = False
                    break
                s0, s1 = _shift(k, l2)
                c0, c1 = c0 + s0, c1 + s1
                y = T.apply(y)
            if not ok:
                continue
            for f0, f1 in _forward_cuts(l2):
                if c1 == f1:
                    continue
                sol = (f0 - c0) / (c1 - f1)
                if not (0 < sol < 1 - l2):
                    continue
                T2 = three_iet(sol, l2)
                conns = [c for c in find_connections(T2, length + 5) if c.length == length]
                if conns and not (aperiodic and has_periodic_piece(T2)):
                    return T2, conns[0].orbit[0], conns[0].orbit[-1]
    raise RuntimeError("no engineered exchange found")


def unit_slot_iet(sizes, perm):
    """Components of integer ``sizes`` made of unit slots; slot ``i`` goes to slot ``perm[i]``.

    Adjacent slots moving together are merged into one piece.
    """
    comps, slots, x = [], [], 0
    for n in sizes:
        comps.append((x, x + n))
        slots += [x + k for k in range(n)]
        x += n + 1
    pieces = []
    for i, s in enumerate(slots):
        shift = slots[perm[i]] - s
        if pieces and pieces[-1][1] == s and pieces[-1][2] == shift:
            pieces[-1] = (pieces[-1][0], s + 1, shift)
        else:
            pieces.append((s, s + 1, shift))
    return EligibleIET(comps, pieces)

"""Exact scalars in Q or in a single quadratic field Q(sqrt(d)).

A ``Scalar`` is ``a + b*sqrt(d)`` with ``a, b`` arbitrary-precision rationals
and ``d`` a square-free non-negative integer.  ``d == 0`` marks a pure
rational and is coerced freely into any field; two different non-zero
radicands never mix.

Signs are decided exactly.  A cheap floating filter answers comparisons
whose outcome is not in doubt, and falls back to the exact test otherwise.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from gmpy2 import mpq

__all__ = [
    "IncompatibleFieldError",
    "Scalar",
    "as_scalar",
    "parse_scalar",
    "scalar_cmp",
    "scalar_arith",
    "squarefree_part",
]

_ZERO = mpq(0)


class IncompatibleFieldError(ValueError):
    """Raised when two scalars live in different quadratic fields."""

    def __init__(self, d1, d2):
        super().__init__(f"incompatible field: sqrt({d1}) vs sqrt({d2})")


def squarefree_part(n):
    """Return ``(k, m)`` with ``n == k*k*m`` and ``m`` square-free."""
    if n < 0:
        raise ValueError("radicand must be non-negative")
    if n == 0:
        return 1, 0
    k, m = 1, n
    p = 2
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            k *= p
        p += 1
    return k, m


def _rat(v):
    if isinstance(v, type(_ZERO)):
        return v
    if isinstance(v, (int, Fraction)):
        return mpq(v)
    if isinstance(v, str):
        return mpq(Fraction(v.strip()))
    raise TypeError(f"cannot build an exact rational from {type(v).__name__}")


def _field(d1, d2):
    if d1 == d2 or d2 == 0:
        return d1
    if d1 == 0:
        return d2
    raise IncompatibleFieldError(d1, d2)


class Scalar:
    """Immutable number ``a + b*sqrt(d)``."""

    __slots__ = ("a", "b", "d", "_approx")

    def __init__(self, a=0, b=0, d=0):
        a = _rat(a)
        b = _rat(b)
        d = int(d)
        if d < 0:
            raise ValueError("radicand must be non-negative")
        if b != 0 and d != 0:
            k, d = squarefree_part(d)
            b = b * k
            if d == 1:
                a, b, d = a + b, _ZERO, 0
        else:
            b, d = _ZERO, 0
        self.a = a
        self.b = b
        self.d = d
        self._approx = None

    @classmethod
    def _raw(cls, a, b, d):
        s = object.__new__(cls)
        if b == 0:
            s.a, s.b, s.d = a, _ZERO, 0
        else:
            s.a, s.b, s.d = a, b, d
        s._approx = None
        return s

    @classmethod
    def sqrt(cls, n):
        """Exact square root of a non-negative integer."""
        return cls(0, 1, n)

    # -- coercion -----------------------------------------------------------
    @staticmethod
    def _coerce(v):
        if isinstance(v, Scalar):
            return v
        return Scalar._raw(_rat(v), _ZERO, 0)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, o):
        if not isinstance(o, Scalar):
            try:
                o = Scalar._coerce(o)
            except TypeError:
                return NotImplemented
        d = self.d if self.d == o.d or o.d == 0 else _field(self.d, o.d)
        return Scalar._raw(self.a + o.a, self.b + o.b, d)

    __radd__ = __add__

    def __sub__(self, o):
        if not isinstance(o, Scalar):
            try:
                o = Scalar._coerce(o)
            except TypeError:
                return NotImplemented
        d = self.d if self.d == o.d or o.d == 0 else _field(self.d, o.d)
        return Scalar._raw(self.a - o.a, self.b - o.b, d)

    def __rsub__(self, o):
        try:
            return Scalar._coerce(o) - self
        except TypeError:
            return NotImplemented

    def __neg__(self):
        return Scalar._raw(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __mul__(self, o):
        if not isinstance(o, Scalar):
            try:
                o = Scalar._coerce(o)
            except TypeError:
                return NotImplemented
        if o.b == 0:
            return Scalar._raw(self.a * o.a, self.b * o.a, self.d)
        if self.b == 0:
            return Scalar._raw(self.a * o.a, self.a * o.b, o.d)
        d = _field(self.d, o.d)
        return Scalar._raw(
            self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d
        )

    __rmul__ = __mul__

    def inverse(self):
        if self.b == 0:
            if self.a == 0:
                raise ZeroDivisionError("division by zero scalar")
            return Scalar._raw(1 / self.a, _ZERO, 0)
        n = self.a * self.a - self.b * self.b * self.d
        return Scalar._raw(self.a / n, -self.b / n, self.d)

    def __truediv__(self, o):
        if not isinstance(o, Scalar):
            try:
                o = Scalar._coerce(o)
            except TypeError:
                return NotImplemented
        if o.b == 0:
            if o.a == 0:
                raise ZeroDivisionError("division by zero scalar")
            return Scalar._raw(self.a / o.a, self.b / o.a, self.d)
        _field(self.d, o.d)
        return self * o.inverse()

    def __rtruediv__(self, o):
        try:
            return Scalar._coerce(o) / self
        except TypeError:
            return NotImplemented

    def conjugate(self):
        return Scalar._raw(self.a, -self.b, self.d)

    # -- sign and order -----------------------------------------------------
    def sign(self):
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        sb = 1 if b > 0 else -1
        if a == 0:
            return sb
        sa = 1 if a > 0 else -1
        if sa == sb:
            return sa
        t = a * a - b * b * self.d
        if t > 0:
            return sa
        if t < 0:
            return sb
        return 0

    def approx(self):
        """Float value and a bound on its absolute error (``None`` on overflow)."""
        ap = self._approx
        if ap is None:
            try:
                fa = float(self.a)
                if self.b == 0:
                    ap = (fa, abs(fa) * 1e-15)
                else:
                    fb = float(self.b) * math.sqrt(self.d)
                    ap = (fa + fb, (abs(fa) + abs(fb)) * 4e-15)
            except OverflowError:
                ap = (0.0, math.inf)
            self._approx = ap
        return ap

    def _cmp(self, o):
        if type(o) is not Scalar:
            o = Scalar._coerce(o)
        if not self.b and not o.b:
            x, y = self.a, o.a
            return (x > y) - (x < y)
        if self.b and o.b and self.d != o.d:
            _field(self.d, o.d)
        fx, ex = self._approx or self.approx()
        fy, ey = o._approx or o.approx()
        diff = fx - fy
        tol = ex + ey + 1e-300
        if diff > tol:
            return 1
        if -diff > tol:
            return -1
        return Scalar._raw(self.a - o.a, self.b - o.b, self.d or o.d).sign()

    def __eq__(self, o):
        if isinstance(o, Scalar):
            return self.a == o.a and self.b == o.b and (self.b == 0 or self.d == o.d)
        if isinstance(o, (int, Fraction, type(_ZERO))):
            return self.b == 0 and self.a == o
        return NotImplemented

    def __ne__(self, o):
        r = self.__eq__(o)
        return r if r is NotImplemented else not r

    def __lt__(self, o):
        return self._cmp(o) < 0

    def __le__(self, o):
        return self._cmp(o) <= 0

    def __gt__(self, o):
        return self._cmp(o) > 0

    def __ge__(self, o):
        return self._cmp(o) >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    # -- conversions --------------------------------------------------------
    def __float__(self):
        if self.b == 0:
            return float(self.a)
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def is_rational(self):
        return self.b == 0

    def to_fraction(self):
        if self.b != 0:
            raise ValueError("scalar is irrational")
        return Fraction(int(self.a.numerator), int(self.a.denominator))

    def floor(self):
        """Exact floor as a Python int."""
        if self.b == 0:
            return int(math.floor(self.a))
        f = math.floor(float(self))
        while self < f:
            f -= 1
        while self >= f + 1:
            f += 1
        return int(f)

    def to_decimal_string(self, digits=12):
        """``digits`` significant digits, for display only."""
        import mpmath

        with mpmath.workdps(digits + 20):
            v = mpmath.mpf(int(self.a.numerator)) / int(self.a.denominator)
            if self.b != 0:
                v += mpmath.mpf(int(self.b.numerator)) / int(self.b.denominator) * mpmath.sqrt(self.d)
            s = mpmath.nstr(v, digits, strip_zeros=True, min_fixed=-30, max_fixed=30)
        if s in ("-0.0", "-0"):
            s = "0"
        if s.endswith(".0"):
            s = s[:-2]
        return s

    def __str__(self):
        if self.b == 0:
            return _fmt(self.a)
        if self.b < 0:
            return f"{_fmt(self.a)} - {_fmt(-self.b)}*sqrt({self.d})"
        return f"{_fmt(self.a)} + {_fmt(self.b)}*sqrt({self.d})"

    def __repr__(self):
        return f"Scalar({self})"

    def __reduce__(self):
        return (parse_scalar, (str(self),))


def _fmt(q):
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def as_scalar(v):
    """Coerce ints, Fractions, mpq and strings to ``Scalar``."""
    if isinstance(v, Scalar):
        return v
    if isinstance(v, str):
        return parse_scalar(v)
    return Scalar._coerce(v)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<sqrt>sqrt\s*\(\s*(?P<rad>\d+)\s*\))|(?P<op>[-+*/]))"
)


def _tokens(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse scalar {text!r} at position {pos}")
        pos = m.end()
        if m.group("num"):
            out.append(("num", Fraction(m.group("num"))))
        elif m.group("sqrt"):
            out.append(("sqrt", int(m.group("rad"))))
        else:
            out.append(("op", m.group("op")))
    return out


def parse_scalar(text):
    """Parse ``"p/q"``, ``"p/q + r/s*sqrt(d)"`` and close variants exactly.

    Accepted terms are ``c``, ``c*sqrt(d)``, ``sqrt(d)``, ``sqrt(d)/q`` and
    ``c*sqrt(d)/q``, joined by ``+`` or ``-``.
    """
    if not isinstance(text, str):
        raise TypeError("scalar text must be a string")
    toks = _tokens(text)
    if not toks:
        raise ValueError("empty scalar text")
    total = Scalar(0)
    i, n = 0, len(toks)
    first = True
    while i < n:
        sign = 1
        if toks[i][0] == "op" and toks[i][1] in "+-":
            sign = -1 if toks[i][1] == "-" else 1
            i += 1
            # a second unary sign is allowed directly after a binary one
            if i < n and toks[i][0] == "op" and toks[i][1] in "+-":
                sign *= -1 if toks[i][1] == "-" else 1
                i += 1
        elif not first:
            raise ValueError(f"expected '+' or '-' in {text!r}")
        first = False
        if i >= n:
            raise ValueError(f"dangling operator in {text!r}")
        coef, rad = Fraction(1), 0
        kind, val = toks[i]
        if kind == "num":
            coef = val
            i += 1
            if i + 1 < n and toks[i] == ("op", "*") and toks[i + 1][0] == "sqrt":
                rad = toks[i + 1][1]
                i += 2
        elif kind == "sqrt":
            rad = val
            i += 1
        else:
            raise ValueError(f"unexpected {val!r} in {text!r}")
        if i + 1 < n and toks[i] == ("op", "/") and toks[i + 1][0] == "num":
            den = toks[i + 1][1]
            if den == 0:
                raise ValueError("zero denominator")
            coef = coef / den
            i += 2
        term = Scalar(coef) if rad == 0 else Scalar(0, coef, rad)
        total = total + (term if sign > 0 else -term)
    return total


def scalar_cmp(x, y):
    """Return ``"less"``, ``"equal"`` or ``"greater"``."""
    c = as_scalar(x)._cmp(as_scalar(y))
    return ("less", "equal", "greater")[c + 1]


def scalar_arith(x, y, op):
    x, y = as_scalar(x), as_scalar(y)
    if op == "+":
        return x + y
    if op in ("-", "−"):
        return x - y
    if op in ("*", "×"):
        return x * y
    if op in ("/", "÷"):
        return x / y
    raise ValueError(f"unknown operation {op!r}")

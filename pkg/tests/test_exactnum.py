from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from windtree.exactnum import (IncompatibleFieldError, Scalar, parse_scalar, scalar_arith, scalar_cmp,
                               squarefree_part)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)


@st.composite
def quad(draw, d=2):
    return Scalar(draw(rationals), draw(rationals), d)


def hi_prec(x):
    with mpmath.workdps(100):
        return mpmath.mpf(x.a.numerator) / x.a.denominator + \
            mpmath.mpf(x.b.numerator) / x.b.denominator * mpmath.sqrt(x.d)


def test_cmp_examples():
    assert scalar_cmp(Scalar(Fraction(1, 2)), Scalar(Fraction(1, 2))) == "equal"
    assert scalar_cmp(Scalar(1, 0, 2), Scalar(0, 1, 2)) == "less"
    assert scalar_cmp(Scalar(Fraction(7, 5)), Scalar(0, 1, 2)) == "less"


def test_arith_examples():
    assert scalar_arith(Scalar(1, 1, 2), Scalar(1, -1, 2), "*") == -1
    assert scalar_arith(Scalar(Fraction(3, 4)), Scalar(Fraction(1, 4)), "+") == 1
    assert scalar_arith(Scalar(1), Scalar(1, 1, 2), "/") == Scalar(-1, 1, 2)


def test_incompatible_field():
    with pytest.raises(IncompatibleFieldError, match="incompatible field"):
        Scalar(0, 1, 2) + Scalar(0, 1, 3)
    with pytest.raises(IncompatibleFieldError):
        scalar_cmp(Scalar(0, 1, 2), Scalar(0, 1, 5))


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        Scalar(1) / Scalar(0)


def test_canonical_form():
    x = Scalar(1, 1, 8)  # sqrt(8) = 2 sqrt(2)
    assert (x.b, x.d) == (2, 2)
    assert Scalar(3, 5, 4) == 13 and Scalar(3, 5, 4).d == 0
    assert Scalar(2, 0, 7).d == 0
    assert squarefree_part(72) == (6, 2)


@pytest.mark.parametrize("text,value", [
    ("1/2", Scalar(Fraction(1, 2))),
    ("-3", Scalar(-3)),
    ("1/2 + 3/4*sqrt(2)", Scalar(Fraction(1, 2), Fraction(3, 4), 2)),
    ("sqrt(2)-1", Scalar(-1, 1, 2)),
    ("sqrt(5)/2", Scalar(0, Fraction(1, 2), 5)),
    ("1 - 2*sqrt(3)/5", Scalar(1, Fraction(-2, 5), 3)),
])
def test_parse(text, value):
    assert parse_scalar(text) == value


@pytest.mark.parametrize("bad", ["", "1/", "sqrt(-2)", "abc", "1//2", "1/0"])
def test_parse_rejects(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse_scalar(bad)


@given(quad())
def test_text_round_trip(x):
    assert parse_scalar(str(x)) == x


@given(quad(), quad(), quad())
def test_field_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == 0
    if x:
        assert x * (1 / x) == 1


@given(quad(), quad())
def test_multiplication_matches_pair_formula(x, y):
    # (a + b s)(c + e s) = (ac + 2 be) + (ae + bc) s for s = sqrt(2)
    a, b, c, e = x.a, x.b, y.a, y.b
    p = x * y
    assert (p.a, p.b if p.d else 0) == (a * c + 2 * b * e, (a * e + b * c) if p.d else 0)


@given(quad(), quad())
def test_sign_agrees_with_high_precision(x, y):
    z = x - y
    with mpmath.workdps(100):
        v = hi_prec(z)
        if abs(v) > mpmath.mpf(10) ** -50:
            assert z.sign() == (1 if v > 0 else -1)
            assert (x < y) == (v < 0)


@given(quad())
def test_floor_and_float(x):
    v = hi_prec(x)
    assert x.floor() == int(mpmath.floor(v))
    assert abs(float(x) - float(v)) <= 1e-12 * max(1.0, abs(float(v)))


@given(st.integers(min_value=1, max_value=10 ** 6))
def test_squarefree_part(n):
    k, d = squarefree_part(n)
    assert k * k * d == n
    assert all(d % (p * p) for p in range(2, int(d ** 0.5) + 1))

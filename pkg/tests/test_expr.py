import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orthocurv.expr import (
    ONE, ZERO, Add, Const, Func, Mul, Pow, Symbol, add, diff, func, mul, power, size, to_str,
)
from orthocurv.numeric import evaluate
from orthocurv.parse import ParseError, UnknownSymbolError, parse
from orthocurv.randmetric import random_expr

t, r, theta, x, y = (Symbol(n, "coord") for n in ("t", "r", "theta", "x", "y"))
a = Symbol("a", "param")
COORDS = [t, r, theta, x, y]


def P(text):
    return parse(text, COORDS, [a])


class TestParse:
    def test_product_of_factors(self):
        e = P("t*sinh(r)*sin(theta)")
        assert isinstance(e, Mul)
        assert set(e.args) == {t, func("sinh", r), func("sin", theta)}

    def test_literal(self):
        assert P("1") == Const(1)

    def test_powers(self):
        e = P("r^2*sin(theta)^2")
        assert set(e.args) == {power(r, 2), power(func("sin", theta), 2)}

    def test_decimal_is_exact(self):
        assert P("0.1") == Const(Fraction(1, 10))

    def test_right_associative_power(self):
        assert P("x^3^2") == power(x, 9)

    def test_unary_minus_binds_looser_than_power(self):
        assert P("-x^2") == mul(Const(-1), power(x, 2))

    def test_precedence(self):
        assert P("1 + 2*x^2/4 - x") == add(ONE, mul(Const(Fraction(1, 2)), power(x, 2)), mul(Const(-1), x))

    def test_sqrt_is_half_power(self):
        assert P("sqrt(x)") == Pow(x, Fraction(1, 2)) == P("x^(1/2)")

    def test_undeclared_symbol(self):
        with pytest.raises(UnknownSymbolError) as exc:
            P("x + b")
        assert exc.value.name == "b"
        assert exc.value.position == 4

    @pytest.mark.parametrize("text,pos", [("x +", 3), ("(x", 2), ("x $ y", 2), ("sin x", 0), ("x^y", 1)])
    def test_syntax_errors_carry_position(self, text, pos):
        with pytest.raises(ParseError) as exc:
            P(text)
        assert exc.value.position == pos

    def test_unknown_function(self):
        with pytest.raises(ParseError, match="unknown function"):
            P("erf(x)")

    def test_symbol_cannot_shadow_function(self):
        with pytest.raises(ValueError):
            parse("x", ["sin"])

    @pytest.mark.parametrize("text", [
        "t*sinh(r)*sin(theta)", "1/sqrt(1 - 2*a/r)", "3/4*y/(1 + x*y)",
        "-x^2 + exp(-x/2)", "abs(x - y)^(3/2)", "cosh(x*y)^-2",
    ])
    def test_print_parse_roundtrip(self, text):
        e = P(text)
        assert P(to_str(e)) == e


class TestCanonicalForm:
    def test_identities(self):
        assert add(x, ZERO) == x
        assert mul(ONE, x) == x
        assert mul(ZERO, x) == ZERO
        assert power(x, 1) == x
        assert power(x, 0) == ONE

    def test_commutative_ordering(self):
        assert add(x, y) == add(y, x)
        assert mul(x, y, t) == mul(t, mul(y, x))

    def test_like_terms_merge(self):
        assert add(x, x) == mul(Const(2), x)
        assert mul(x, x) == power(x, 2)
        assert add(x, mul(Const(-1), x)) == ZERO

    def test_constants_fold(self):
        assert P("2*3 + 1/2") == Const(Fraction(13, 2))
        assert P("sqrt(4)") == Const(2)

    def test_exp_ln(self):
        assert func("exp", func("ln", x)) == x
        assert func("exp", mul(Const(2), func("ln", x))) == power(x, 2)

    def test_odd_even(self):
        assert func("sin", mul(Const(-1), x)) == mul(Const(-1), func("sin", x))
        assert func("cosh", mul(Const(-1), x)) == func("cosh", x)

    def test_immutable(self):
        with pytest.raises(AttributeError):
            x.name = "z"


class TestDiff:
    def test_power_rule(self):
        assert diff(power(x, 2), x) == mul(Const(2), x)

    def test_coordinate_factor(self):
        assert diff(P("t*sinh(r)"), t) == func("sinh", r)

    def test_sin_against_finite_difference(self):
        e = P("sin(theta)")
        d = evaluate(diff(e, theta), {"theta": 0.7})
        h = 1e-5
        fd = (math.sin(0.7 + h) - math.sin(0.7 - h)) / (2 * h)
        assert abs(d - fd) <= 1e-8 * abs(fd)

    def test_linear(self):
        f, g = P("x^3*sin(y)"), P("exp(x*y)")
        assert diff(add(f, g), x) == add(diff(f, x), diff(g, x))

    def test_constant_in_x(self):
        assert diff(P("sin(theta)*a"), x) == ZERO

    def test_params_are_not_coordinates(self):
        assert diff(P("a*x"), x) == a

    @pytest.mark.parametrize("name", ["sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "ln", "abs"])
    def test_every_function(self, name):
        e = func(name, P("x + 2"))
        d = evaluate(diff(e, x), {"x": 0.3})
        h = 1e-6
        fd = (evaluate(e, {"x": 0.3 + h}) - evaluate(e, {"x": 0.3 - h})) / (2 * h)
        assert d == pytest.approx(fd, rel=1e-7)


XS = (x, y)


@given(st.integers(0, 2**32 - 1), st.floats(0.6, 1.4), st.floats(0.6, 1.4))
def test_diff_matches_finite_difference(seed, px, py):
    e = random_expr(np.random.default_rng(seed), XS, depth=3)
    p = {"x": px, "y": py}
    d = evaluate(diff(e, x), p)
    # Richardson-extrapolated central difference, O(h^4)
    h = 1e-3 * max(1.0, abs(px))

    def cd(h):
        return (evaluate(e, {**p, "x": px + h}) - evaluate(e, {**p, "x": px - h})) / (2 * h)

    fd = (4 * cd(h / 2) - cd(h)) / 3
    assert abs(d - fd) <= 1e-6 * max(1.0, abs(fd))


@given(st.integers(0, 2**32 - 1))
def test_print_parse_is_fixed_point(seed):
    e = random_expr(np.random.default_rng(seed), XS, depth=3)
    assert parse(to_str(e), XS) == e


@given(st.integers(0, 2**32 - 1))
def test_size_counts_nodes(seed):
    e = random_expr(np.random.default_rng(seed), XS, depth=2)
    assert size(e) >= 1

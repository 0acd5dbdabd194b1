import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sasakilab.expr import (ArityError, Chart, DomainError, ExprSyntaxError, UnknownIdentifierError,
                            eval_jet, evaluate, parse_expr)

XY = Chart(("x", "y"))


@pytest.mark.parametrize("text, expected", [
    ("-x^2", -2.25),            # power binds tighter than unary minus
    ("2^3^2", 512.0),           # right associative
    ("x-y-1", 0.0),             # left associative
    ("x/y/3", 1.0),
    ("x^-1", 1 / 1.5),
    ("2*pi", 2 * math.pi),
    ("sqrt(x*6)", 3.0),
    ("exp(log(x))", 1.5),
])
def test_precedence_and_values(text, expected):
    assert evaluate(parse_expr(text, XY), [1.5, 0.5]) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text, exc, offset", [
    ("x+", ExprSyntaxError, 2),
    ("(x", ExprSyntaxError, 2),
    ("foo(x)", UnknownIdentifierError, 0),
    ("x+q", UnknownIdentifierError, 2),
    ("sin(x,y)", ArityError, 5),
])
def test_parse_errors_carry_offsets(text, exc, offset):
    with pytest.raises(exc) as info:
        parse_expr(text, XY)
    assert info.value.offset == offset


@pytest.mark.parametrize("text", ["1/x", "log(x-1)", "sqrt(-1-y^2)"])
def test_domain_errors(text):
    with pytest.raises(DomainError):
        evaluate(parse_expr(text, XY), [0.0, 0.0])


def test_reserved_coordinate_names():
    with pytest.raises(ValueError):
        Chart(("x", "sin"))
    with pytest.raises(ValueError):
        Chart(("x", "x"))


def test_jet_of_known_function():
    # f = x^2 y + sin(y): fxx = 2y, fxy = 2x, fyy = -sin(y)
    j = eval_jet(parse_expr("x^2*y+sin(y)", XY), [0.7, 0.3], 3)
    assert j.value == pytest.approx(0.49 * 0.3 + math.sin(0.3), abs=1e-15)
    assert j.partial(0) == pytest.approx(2 * 0.7 * 0.3, abs=1e-15)
    assert j.table(2) == pytest.approx(np.array([[0.6, 1.4], [1.4, -math.sin(0.3)]]), abs=1e-14)
    assert j.partial(1, 1, 1) == pytest.approx(-math.cos(0.3), abs=1e-14)
    assert j.partial(0, 0, 1) == pytest.approx(2.0, abs=1e-14)


_leaf = st.sampled_from(["x", "y", "1.5", "2", "pi"])


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        children.map(lambda c: f"-({c})"),
        children.map(lambda c: f"sin({c})"),
        children.map(lambda c: f"exp(({c})/10)"),
        children.map(lambda c: f"({c})^2"),
    )


expressions = st.recursive(_leaf, _combine, max_leaves=8)


@given(expressions, st.floats(-1, 1), st.floats(-1, 1))
def test_render_round_trip(text, x, y):
    e = parse_expr(text, XY)
    again = parse_expr(str(e), XY)
    assert again.ast == e.ast
    assert evaluate(again, [x, y]) == evaluate(e, [x, y])


@given(expressions, st.floats(-1, 1), st.floats(-1, 1))
def test_jet_matches_central_differences(text, x, y):
    e = parse_expr(text, XY)
    j = eval_jet(e, [x, y], 1)
    h = 1e-6
    for i in range(2):
        p, m = [x, y], [x, y]
        p[i] += h
        m[i] -= h
        fd = (evaluate(e, p) - evaluate(e, m)) / (2 * h)
        assert j.partial(i) == pytest.approx(fd, rel=1e-5, abs=1e-5)
    assert j.value == pytest.approx(evaluate(e, [x, y]), rel=1e-12, abs=1e-12)

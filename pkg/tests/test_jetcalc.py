import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gfnets.aaa import random_expression
from gfnets.errors import EvaluationError, ExpressionSyntaxError
from gfnets.jetcalc import (
    Func,
    Var,
    compose_jets,
    jet,
    parse,
    to_string,
    translate,
)

AA = "sin(1/(2+cos(x)+cos(sqrt(2)*x)))"


def rand_expr(seed, depth=3):
    return random_expression(np.random.default_rng(seed), depth)


# -- parsing ---------------------------------------------------------------


def test_parse_base_case():
    assert parse("sin(x)") == Func("sin", Var())


def test_parse_nested_aa_example():
    e = parse(AA)
    x = np.linspace(-5, 5, 11)
    ref = np.sin(1 / (2 + np.cos(x) + np.cos(math.sqrt(2) * x)))
    assert np.allclose(e(x), ref, rtol=0, atol=1e-15)


def test_syntax_error_offset():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse("x^^2")
    assert exc.value.position == 2


@pytest.mark.parametrize("text", ["sin(", "x +", "foo(x)", "2**x", "sqrt(x)", "x^1.5"])
def test_malformed_inputs(text):
    with pytest.raises(ExpressionSyntaxError):
        parse(text)


def test_parenthesized_negative_exponent():
    e = parse("eps^(-2)*sin(x)").bind(eps=0.5)
    assert e(np.array([math.pi / 2]))[0] == pytest.approx(4.0)


def test_unbound_parameter():
    with pytest.raises(EvaluationError):
        parse("eps*x")(np.array([1.0]))


def test_division_guard():
    with pytest.raises(EvaluationError):
        parse("1/x")(np.array([0.0]))


@given(st.integers(0, 10_000))
def test_print_parse_roundtrip(seed):
    e = rand_expr(seed)
    assert parse(to_string(e)) == e


# -- jets ------------------------------------------------------------------


def test_sine_jet():
    assert jet(parse("sin(x)"), 0.0, 3).d == pytest.approx((0, 1, 0, -1), abs=1e-15)


def test_exp_jet():
    assert jet(parse("exp(x)"), 0.0, 4).d == pytest.approx((1, 1, 1, 1, 1), abs=1e-15)


def test_square_jet():
    assert jet(parse("x^2"), 3.0, 3).d == pytest.approx((9, 6, 2, 0), abs=1e-14)


def test_jet_length():
    for k in range(9):
        assert len(jet(parse("cos(x)*x"), 0.3, k).d) == k + 1


@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_first_derivative_matches_finite_difference(seed, x):
    e = rand_expr(seed)
    h = 1e-5 * max(1.0, abs(x))
    d = e.derivs(np.array([x - h, x, x + h]), 1)
    fd = (d[0, 2] - d[0, 0]) / (2 * h)
    scale = max(1.0, abs(d[1, 1]), abs(d[0, 1]))
    assert abs(fd - d[1, 1]) <= 1e-6 * scale


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.floats(-2, 2), st.integers(0, 8))
def test_leibniz_rule(s1, s2, x, k):
    f, g = rand_expr(s1), rand_expr(s2)
    lhs = np.array(jet(f * g, x, k).d)
    rhs = np.array((jet(f, x, k) * jet(g, x, k)).d)
    scale = max(1.0, np.abs(rhs).max())
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-5, 5), st.integers(0, 6))
def test_translation_commutes_with_jets(seed, x, omega, k):
    f = rand_expr(seed)
    a = np.array(jet(translate(f, omega), x, k).d)
    b = np.array(jet(f, x + omega, k).d)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.abs(b).max())


def test_translate_examples():
    s = translate(parse("sin(x)"), math.pi)
    x = np.array([0.0, 1.0, 2.0])
    assert np.allclose(s(x), -np.sin(x), atol=1e-15)
    e = parse("cos(x)*exp(x)")
    assert translate(e, 0.0) == e
    assert translate(parse("x^2"), 1.0)(np.array([2.0]))[0] == pytest.approx(9.0)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.floats(-1, 1))
def test_chain_rule_composition(s1, s2, x):
    F, u = rand_expr(s1, 2), rand_expr(s2, 2)
    k = 5
    uj = jet(u, x, k)
    lhs = np.array(compose_jets(jet(F, uj.d[0], k), uj).d)
    rhs = np.array(jet(F.substitute(u), x, k).d)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.abs(rhs).max())

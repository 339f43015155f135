import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowkick.exprsys import (BinOp, Call, DimensionMismatchError, ExprSyntaxError, Neg, Num,
                              UnknownIdentifierError, Var, format_expr, load_system, parse_expr,
                              parse_spec, parse_system)
from flowkick.models import make_klausmeier, make_logistic, make_predator_prey

SYSTEMS = Path(__file__).resolve().parent.parent / "demos" / "systems"


def ev(text, **env):
    return parse_expr(text).evaluate(env)


# ---------------------------------------------------------------- expressions

def test_precedence():
    assert ev("1+2*3^2") == 19
    assert ev("-2^2") == -4
    assert ev("2^-1") == 0.5
    assert ev("2^3^2") == 512
    assert ev("-2*3") == -6
    assert ev("8/4/2") == 1
    assert ev("7-2-1") == 4
    assert ev("(1+2)*3") == 9


def test_functions_and_constants():
    assert ev("exp(ln(3))") == pytest.approx(3.0, rel=1e-15)
    assert ev("sin(pi/2) + cos(0)") == pytest.approx(2.0)
    assert ev("sqrt(16) + abs(-3)") == 7
    assert ev("x*(1-x)", x=0.25) == 0.1875


def test_variable_exponent_uses_exp_ln():
    assert ev("x^y", x=2.0, y=3.0) == pytest.approx(8.0, rel=1e-14)
    out = ev("x^y", x=np.array([1.0, 4.0]), y=np.array([2.0, 0.5]))
    np.testing.assert_allclose(out, [1.0, 2.0])


def test_numbers_with_exponents():
    assert ev("1.5e-3*2") == pytest.approx(3e-3)
    assert ev(".5 + 2.") == 2.5


def test_dangling_parenthesis_error():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x*(1-")
    err = info.value
    assert (err.line, err.col) == (1, 6)
    assert "unclosed '('" in str(err) and "column 3" in str(err)
    assert "number" in err.expected


@pytest.mark.parametrize("text, col", [("1 +* 2", 4), ("2 3", 3), ("(1", 3), ("1)", 2),
                                       ("exp 2", 5), ("$", 1)])
def test_syntax_error_positions(text, col):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(text)
    assert info.value.col == col


def test_unknown_function_reported():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expr("1 + tanh(x)")
    assert info.value.col == 5 and "exp" in info.value.expected


def test_format_minimal_parentheses():
    assert format_expr(parse_expr("(x*(1-x))")) == "x * (1 - x)"
    assert format_expr(parse_expr("(-2)^2")) == "(-2)^2"
    assert format_expr(parse_expr("a-(b-c)")) == "a - (b - c)"
    assert format_expr(parse_expr("(a-b)-c")) == "a - b - c"
    assert format_expr(parse_expr("(2^3)^2")) == "(2^3)^2"


# ---------------------------------------------------------------- round trip

NAMES = ("x", "y", "lambda")
leaves = st.one_of(st.floats(0, 50, allow_nan=False).map(Num), st.sampled_from(NAMES).map(Var))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(children, st.integers(0, 3).map(float).map(Num)).map(
            lambda t: BinOp("^", t[0], t[1])),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "abs"]), children).map(
            lambda t: Call(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(tree=trees, point=st.tuples(*[st.floats(-2, 2)] * 3))
def test_format_parse_round_trip(tree, point):
    text = format_expr(tree)
    again = parse_expr(text)
    assert again == tree
    env = dict(zip(NAMES, point))
    with np.errstate(all="ignore"):
        a, b = tree.evaluate(env), again.evaluate(env)
    assert (np.isnan(a) and np.isnan(b)) or a == b or abs(a - b) <= 1e-15 * max(1.0, abs(a))


# ---------------------------------------------------------------- system files

def _cross_check(sys_file, sys_ref, sample, lams, n=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x = sample(rng)
        lam = rng.uniform(*lams)
        worst = max(worst, np.max(np.abs(sys_file.f(x) - sys_ref.f(x))),
                    np.max(np.abs(sys_file.r(x, lam) - sys_ref.r(x, lam))))
    return worst


def test_logistic_file_matches_builtin():
    sys_file = load_system(SYSTEMS / "logistic.sys")
    worst = _cross_check(sys_file, make_logistic().system, lambda g: g.uniform(0, 2, 1),
                         (-0.5, 0.5))
    assert worst < 1e-12


def test_klausmeier_file_matches_builtin():
    sys_file = load_system(SYSTEMS / "klausmeier.sys")
    worst = _cross_check(sys_file, make_klausmeier(0.75).system, lambda g: g.uniform(0, 3, 2),
                         (0.0, 3.0))
    assert worst < 1e-12


def test_predator_prey_file_matches_builtin():
    sys_file = load_system(SYSTEMS / "predator_prey.sys")
    worst = _cross_check(sys_file, make_predator_prey().system, lambda g: g.uniform(0, 4, 2),
                         (0.0, 0.5))
    assert worst < 1e-12


def test_inline_logistic_text():
    sys_ = parse_system("[states]\nx\n[flow]\nx' = x*(1-x)\n[kickrate]\nr_x = lambda\n")
    assert sys_.n == 1 and sys_.domain_hint is None
    np.testing.assert_allclose(sys_.vector_field(np.array([[0.5, 0.2]]), -0.24)[0],
                               [0.01, 0.16 - 0.24])


def test_batched_evaluation_with_constant_component():
    sys_ = load_system(SYSTEMS / "klausmeier.sys")
    xs = np.ones((2, 3, 4))
    assert sys_.r(xs, 2.0).shape == (2, 3, 4)
    assert sys_.f(xs).shape == (2, 3, 4)


def test_params_may_reference_earlier_params():
    spec = parse_spec("[states]\nx\n[params]\na = 2\nb = a^2 + pi\n[flow]\nx' = -b*x\n"
                      "[kickrate]\nr_x = lambda\n")
    assert spec.params["b"] == pytest.approx(4 + math.pi)


def test_spec_text_round_trip():
    text = (SYSTEMS / "predator_prey.sys").read_text()
    spec = parse_spec(text)
    again = parse_spec(spec.to_text())
    assert again.flow == spec.flow and again.kickrate == spec.kickrate
    assert again.params == spec.params
    np.testing.assert_array_equal(again.domain[0], spec.domain[0])


def test_dimension_mismatch():
    text = "[states]\nx, y\n[flow]\nx' = y\n[kickrate]\nr_x = lambda\nr_y = 0\n"
    with pytest.raises(DimensionMismatchError) as info:
        parse_system(text)
    assert "missing y" in str(info.value)


def test_unknown_identifier_with_position():
    text = "[states]\nx\n[flow]\nx' = x*(1-z)\n[kickrate]\nr_x = lambda\n"
    with pytest.raises(UnknownIdentifierError) as info:
        parse_system(text)
    assert info.value.line == 4 and info.value.col == 11
    assert "x" in info.value.expected


def test_lambda_not_allowed_in_flow():
    text = "[states]\nx\n[flow]\nx' = lambda*x\n[kickrate]\nr_x = 0\n"
    with pytest.raises(UnknownIdentifierError) as info:
        parse_system(text)
    assert info.value.col == 6


def test_syntax_error_inside_file_has_file_position():
    text = "[states]\nx\n[flow]\nx' = x*(1-\n[kickrate]\nr_x = lambda\n"
    with pytest.raises(ExprSyntaxError) as info:
        parse_system(text)
    assert info.value.line == 4 and info.value.col == 11


def test_missing_section():
    with pytest.raises(ExprSyntaxError):
        parse_system("[states]\nx\n[flow]\nx' = x\n")


def test_reserved_state_name():
    with pytest.raises(ExprSyntaxError):
        parse_system("[states]\nexp\n[flow]\nexp' = 1\n[kickrate]\nr_exp = 0\n")

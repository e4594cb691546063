import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phicontract.core import CarrierSpec
from phicontract.errors import (ArityError, DivisionByZeroError, EvalDomainError, ExprSyntaxError,
                                NonFiniteError, NotASelfMapError, TotalityError,
                                UnknownIdentifierError)
from phicontract.exprlang import (BinOp, Call, Neg, Num, PiecewiseMap, Var, apply_map, evaluate,
                                  parse, to_source)


def test_parse_phi_of_worked_example():
    e = parse("t/(1+t)", {"t"})
    assert e.tree == BinOp("/", Var("t"), BinOp("+", Num(1.0), Var("t")))


def test_parse_max_metric():
    e = parse("max(x,y)", {"x", "y"})
    assert e.tree == Call("max", (Var("x"), Var("y")))
    assert e(x=1, y=3) == 3


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x/(", {"x"})
    assert info.value.offset == 3


@pytest.mark.parametrize("src, offset", [("x +* 2", 3), ("(x", 2), ("x 2", 2), ("x $ 1", 2)])
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src, {"x"})
    assert info.value.offset == offset


def test_unknown_identifier_and_arity():
    with pytest.raises(UnknownIdentifierError):
        parse("x + y", {"x"})
    with pytest.raises(UnknownIdentifierError):
        parse("sin(x)", {"x"})
    with pytest.raises(ArityError):
        parse("max(x)", {"x"})
    with pytest.raises(ArityError):
        parse("abs(x, x)", {"x"})


def test_eval_examples():
    assert parse("t/(1+t)", {"t"})(t=3) == 0.75
    assert parse("x/2", {"x"})(x=0) == 0
    with pytest.raises(DivisionByZeroError):
        parse("1/(x-1)", {"x"})(x=1)


@pytest.mark.parametrize("src, value", [
    ("2^3^2", 512.0),
    ("-2^2", 4.0),          # unary minus sits below ^ in the grammar
    ("1 - 2 - 3", -4.0),
    ("8/4/2", 1.0),
    ("2*3^2", 18.0),
    ("-(2^2)", -4.0),
    ("sqrt(16) + abs(-3) + min(1, 2) + max(1, 2)", 10.0),
    ("7/5", 1.4),
    ("1e-3 * 1000", 1.0),
    (".5 + 2.", 2.5),
])
def test_precedence_and_literals(src, value):
    assert evaluate(parse(src, set()), {}) == pytest.approx(value, abs=0, rel=1e-15)


@pytest.mark.parametrize("src, x, exc", [
    ("sqrt(x)", -1.0, EvalDomainError),
    ("0^x", -1.0, EvalDomainError),
    ("x^0.5", -1.0, EvalDomainError),
    ("10^(1000*x)", 1.0, NonFiniteError),
])
def test_eval_errors(src, x, exc):
    e = parse(src, {"x"})
    with pytest.raises(exc):
        e(x=x)
    with pytest.raises(exc):
        e.vectorized(x=np.array([x]))


def test_vector_error_names_first_bad_point():
    e = parse("1/(x-1)", {"x"})
    with pytest.raises(DivisionByZeroError) as info:
        e.vectorized(x=np.array([0.0, 0.5, 1.0, 2.0]))
    assert info.value.bindings == {"x": 1.0}


# -- round trip and scalar/vector agreement ----------------------------------

leaves = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Num),
    st.sampled_from([Var("x"), Var("y")]),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(lambda t: Call(t[0], (t[1], t[2]))),
        st.tuples(st.sampled_from(["abs", "sqrt"]), children).map(lambda t: Call(t[0], (t[1],))),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_parse_print_roundtrip(tree):
    src = to_source(tree)
    once = parse(src, {"x", "y"})
    assert once.tree == tree
    assert parse(to_source(once.tree), {"x", "y"}).tree == once.tree


@settings(max_examples=200)
@given(trees, st.floats(-10, 10), st.floats(-10, 10))
def test_scalar_and_vector_eval_agree(tree, x, y):
    expr = parse(to_source(tree), {"x", "y"})
    try:
        scalar = expr(x=x, y=y)
    except ArithmeticError as exc:
        with pytest.raises(type(exc)):
            expr.vectorized(x=np.array([x]), y=np.array([y]))
        return
    vec = expr.vectorized(x=np.array([x]), y=np.array([y]))[0]
    assert vec == pytest.approx(scalar, rel=1e-12, abs=1e-300)


# -- piecewise maps ----------------------------------------------------------

def _ex2_map(first_hi):
    return PiecewiseMap.from_pairs([((0, first_hi), "x/2"), ((3, 4), "7/5")])


def test_apply_map_repaired():
    carrier = CarrierSpec.make([(0, 2), (3, 4)])
    T = _ex2_map(2)
    assert apply_map(T, carrier, 3) == 1.4
    assert apply_map(T, carrier, 0) == 0


def test_apply_map_unrepaired_carrier_not_self_map():
    carrier = CarrierSpec.make([(0, 1), (3, 4)])
    with pytest.raises(NotASelfMapError) as info:
        apply_map(_ex2_map(1), carrier, 3)
    assert info.value.x == 3 and info.value.image == 1.4


def test_first_matching_piece_wins_and_totality():
    T = PiecewiseMap.from_pairs([((0, 2), "x/2"), ((1, 3), "0")])
    assert T.raw(1.5) == 0.75
    assert T.raw(2.5) == 0
    with pytest.raises(TotalityError):
        T.raw(5)
    with pytest.raises(TotalityError):
        T.raw_array(np.array([0.0, 5.0]))

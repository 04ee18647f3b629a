import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olspace import expr, orlicz
from olspace.expr import Binary, Call, Const, DomainError, LexError, ParseError, Unary, Var


def kinds(src):
    return [t.kind for t in expr.tokenize(src)]


def test_tokenize_examples():
    assert kinds("u^2") == ["Ident", "Caret", "Number"]
    assert kinds("log(1+u)") == ["Ident", "LParen", "Number", "Plus", "Ident", "RParen"]
    with pytest.raises(LexError) as e:
        expr.tokenize("u $ 2")
    assert e.value.position == 2


def test_token_positions_increase():
    toks = expr.tokenize("  max(u, 2.5e-3) * exp(-u)")
    pos = [t.position for t in toks]
    assert pos == sorted(set(pos))


def test_parse_examples():
    assert expr.compile_expr("u^2*log(1+u)") == Binary(
        "*", Binary("^", Var("u"), Const(2.0)), Call("log", (Binary("+", Const(1.0), Var("u")),)))
    with pytest.raises(ParseError) as e:
        expr.compile_expr("1+")
    assert "number" in e.value.expected
    assert expr.compile_expr("-u^2") == Unary("-", Binary("^", Var("u"), Const(2.0)))


def test_power_is_right_associative():
    assert expr.compile_expr("2^3^2") == Binary("^", Const(2.0), Binary("^", Const(3.0), Const(2.0)))
    assert expr.eval_ast(expr.compile_expr("2^3^2"), ("u", 0)) == 512


def test_eval_examples():
    assert expr.eval_ast(expr.compile_expr("u^2"), ("u", 3)) == 9
    assert expr.eval_ast(expr.compile_expr("log(1+u)"), ("u", 0)) == 0
    with pytest.raises(DomainError):
        expr.eval_ast(expr.compile_expr("sqrt(u-1)"), ("u", 0))


def test_variable_role_enforced():
    with pytest.raises(ParseError):
        expr.compile_expr("t^2", "u")


def test_no_implicit_multiplication():
    with pytest.raises(ParseError):
        expr.compile_expr("2u")


OPS = ["+", "-", "*", "/", "^"]


@pytest.mark.parametrize("a", OPS)
@pytest.mark.parametrize("b", OPS)
def test_precedence_table_total(a, b):
    src = f"2 {a} 3 {b} 5"
    node = expr.compile_expr(src)
    assert expr.compile_expr(expr.to_source(node)) == node
    prec = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
    x, y, z = 2.0, 3.0, 5.0
    ev = {"+": lambda p, q: p + q, "-": lambda p, q: p - q, "*": lambda p, q: p * q,
          "/": lambda p, q: p / q, "^": lambda p, q: p ** q}
    right_first = prec[b] > prec[a] or (a == b == "^")
    want = ev[a](x, ev[b](y, z)) if right_first else ev[b](ev[a](x, y), z)
    assert expr.eval_ast(node, ("u", 0)) == pytest.approx(want, rel=1e-15)


atoms = st.sampled_from(["u", "1", "2.5", "0.5", "3e-2"])


exprs = st.recursive(
    atoms,
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from(OPS), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        inner.map(lambda s: f"-{s}"),
        st.tuples(st.sampled_from(["exp", "sqrt", "abs", "log"]), inner).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(inner, inner).map(lambda t: f"max({t[0]}, {t[1]})"),
    ),
    max_leaves=8,
)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_print_parse_round_trip(src):
    node = expr.compile_expr(src)
    assert expr.compile_expr(expr.to_source(node)) == node


BUILTIN_EQUIV = [
    ("u^2", orlicz.Power(2)),
    ("u^1.5", orlicz.Power(1.5)),
    ("u^3*log(1+u)", orlicz.PowerLog(3, 1)),
    ("u^2*log(1+u)^2", orlicz.PowerLog(2, 2)),
    ("exp(u)-1", orlicz.ExpMinusOne()),
]


@pytest.mark.parametrize("src,phi", BUILTIN_EQUIV)
def test_builtin_equivalence(src, phi):
    parsed = orlicz.Parsed(src)
    u = np.logspace(-3, 2, 200)
    for x in u:
        assert parsed(x) == pytest.approx(phi(x), rel=1e-12)


MALFORMED = ["", "   ", "u $", "1+", "(u", "u)", "u^", "*u", "2u", "log()", "log(u,", "log u", "max(u)",
             "foo(u)", "u +* 2", "((u)", "u..2", "1.2.3", "u,2", "exp(", "sqrt)", "u # 2", "^u", "u ^ ^ 2",
             "min(,u)", "abs(u,u)", "3 4", "u @", "u + )", "log(u))"]


@pytest.mark.parametrize("src", MALFORMED)
def test_malformed_inputs_report_positions(src):
    with pytest.raises(expr.ExprError) as e:
        expr.compile_expr(src)
    assert 0 <= e.value.position <= len(src)
    assert f"column {e.value.column}" in str(e.value)


def test_overflow_is_infinite_not_error():
    assert expr.eval_ast(expr.compile_expr("exp(u)"), ("u", 1000)) == math.inf

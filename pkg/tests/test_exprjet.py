"""Parser and jet-evaluation tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmetric.errors import (EvaluationDomainError, ExpressionSyntaxError,
                             UnknownIdentifierError)
from nsmetric.exprjet import (Binary, Call, Num, Unary, Var, evaluate_jet2,
                              evaluate_value, parse_expression, to_source)

from oracles import COORDS, expr_fn, fd_grad, fd_hess, rel_err

SYM = COORDS


def test_parse_add_pow():
    e = parse_expression("t^2 + 1", ["t"])
    assert e == Binary("+", Binary("^", Var("t"), Num(2.0)), Num(1.0))


def test_parse_call_mul():
    e = parse_expression("sin(t)*x", ["t", "x"])
    assert e == Binary("*", Call("sin", (Var("t"),)), Var("x"))


def test_syntax_error_offset_and_expected():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_expression("t +* 2", ["t"])
    assert err.value.offset == 3
    assert "identifier" in err.value.expected or "number" in err.value.expected


def test_unknown_identifier_named():
    with pytest.raises(UnknownIdentifierError) as err:
        parse_expression("t + qq", ["t"])
    assert err.value.name == "qq"
    assert err.value.offset == 4


@pytest.mark.parametrize("src", ["", "   ", "(t", "sin t", "pow(t)", "t )", "1..2"])
def test_malformed_inputs_rejected(src):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(src, ["t"])


def test_precedence_and_associativity():
    assert evaluate_value(parse_expression("2^3^2", SYM), (0, 0, 0, 0)) == 512.0
    assert evaluate_value(parse_expression("7-4-2", SYM), (0, 0, 0, 0)) == 1.0
    assert evaluate_value(parse_expression("12/3/2", SYM), (0, 0, 0, 0)) == 2.0
    # unary minus binds looser than ^ but tighter than *
    assert evaluate_value(parse_expression("-2^2", SYM), (0, 0, 0, 0)) == -4.0
    assert evaluate_value(parse_expression("2^-1", SYM), (0, 0, 0, 0)) == 0.5
    assert evaluate_value(parse_expression("-2*3", SYM), (0, 0, 0, 0)) == -6.0
    assert evaluate_value(parse_expression("2+3*4^2", SYM), (0, 0, 0, 0)) == 50.0


def test_pow_call_matches_caret():
    a = evaluate_value(parse_expression("pow(t, 3)", SYM), (1.7, 0, 0, 0))
    b = evaluate_value(parse_expression("t^3", SYM), (1.7, 0, 0, 0))
    assert a == b


def test_roundtrip_examples():
    for src in ["t^2 + 1", "sin(t)*x - 3/(y + 4)", "-(t + x)^2", "t^-2",
                "2 - t - x", "abs(t) * tanh(x)", "pow(t, x + 1)",
                "-sin(t)^2", "(t + x) * (y - z)", "1.5e-3 * t"]:
        e = parse_expression(src, SYM)
        assert parse_expression(to_source(e), SYM) == e


_leaf = st.one_of(
    st.floats(min_value=0.0, max_value=100.0, allow_nan=False).map(Num),
    st.sampled_from([Var(c) for c in COORDS]),
)


def _exprs(children):
    binary = st.tuples(st.sampled_from("+-*/^"), children, children).map(
        lambda t: Binary(t[0], t[1], t[2]))
    unary = children.map(lambda e: Unary("-", e))
    call1 = st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh", "abs"]),
                      children).map(lambda t: Call(t[0], (t[1],)))
    return st.one_of(binary, unary, call1)


_ast = st.recursive(_leaf, _exprs, max_leaves=20)


@settings(max_examples=150, deadline=None)
@given(_ast)
def test_roundtrip_random_trees(e):
    assert parse_expression(to_source(e), SYM) == e


def test_jet_polynomial():
    j = evaluate_jet2(parse_expression("t^2", SYM), (3.0, 0, 0, 0))
    assert j.value == 9.0
    assert j.grad[0] == 6.0
    assert j.hess[0, 0] == 2.0


def test_jet_sine():
    j = evaluate_jet2(parse_expression("sin(t)", SYM), (0.0, 0, 0, 0))
    assert j.value == 0.0
    assert j.grad[0] == 1.0
    assert j.hess[0, 0] == 0.0


def test_jet_vs_finite_differences_example():
    src = "exp(2*t)*x"
    j = evaluate_jet2(parse_expression(src, SYM), (0.5, 2.0, 0, 0))
    f = expr_fn(src)
    assert rel_err(j.grad, fd_grad(f, (0.5, 2.0, 0, 0))) < 1e-6
    assert rel_err(j.hess, fd_hess(f, (0.5, 2.0, 0, 0))) < 1e-6


def test_jet_constant_and_coordinate():
    j = evaluate_jet2(parse_expression("4.25", SYM), (1, 2, 3, 4))
    assert j.value == 4.25 and not j.grad.any() and not j.hess.any()
    j = evaluate_jet2(parse_expression("y", SYM), (1, 2, 3, 4))
    assert j.value == 3.0
    assert list(j.grad) == [0.0, 0.0, 1.0, 0.0]
    assert not j.hess.any()


def test_jet_params():
    j = evaluate_jet2(parse_expression("k * t", ["t", "x", "y", "z", "k"]),
                      (2.0, 0, 0, 0), {"k": 3.0})
    assert j.value == 6.0 and j.grad[0] == 3.0 and not j.hess.any()


def test_hessian_exactly_symmetric(rng):
    for _ in range(25):
        from oracles import random_expression
        src = random_expression(rng)
        j = evaluate_jet2(parse_expression(src, SYM), rng.uniform(-1.5, 1.5, 4))
        assert np.array_equal(j.hess, j.hess.T)


def test_jet_linearity(rng):
    for _ in range(25):
        from oracles import random_expression
        f_src, g_src = random_expression(rng), random_expression(rng)
        a, b = (float(v) for v in rng.uniform(-3, 3, size=2))
        pt = rng.uniform(-1.5, 1.5, 4)
        jf = evaluate_jet2(parse_expression(f_src, SYM), pt)
        jg = evaluate_jet2(parse_expression(g_src, SYM), pt)
        combo_src = f"{a!r} * ({f_src}) + {b!r} * ({g_src})"
        jc = evaluate_jet2(parse_expression(combo_src, SYM), pt)
        assert abs(jc.value - (a * jf.value + b * jg.value)) < 1e-12 * max(1, abs(jc.value))
        assert np.allclose(jc.grad, a * jf.grad + b * jg.grad, rtol=0, atol=1e-11)
        assert np.allclose(jc.hess, a * jf.hess + b * jg.hess, rtol=0, atol=1e-11)


def test_product_rule(rng):
    for _ in range(25):
        from oracles import random_expression
        f_src, g_src = random_expression(rng), random_expression(rng)
        pt = rng.uniform(-1.5, 1.5, 4)
        jf = evaluate_jet2(parse_expression(f_src, SYM), pt)
        jg = evaluate_jet2(parse_expression(g_src, SYM), pt)
        jp = evaluate_jet2(parse_expression(f"({f_src}) * ({g_src})", SYM), pt)
        cross = np.outer(jf.grad, jg.grad)
        expected = jf.value * jg.hess + jg.value * jf.hess + cross + cross.T
        scale = max(1.0, float(np.max(np.abs(expected))))
        assert np.max(np.abs(jp.hess - expected)) < 1e-12 * scale


@pytest.mark.parametrize("src,point,needle", [
    ("ln(t)", (-1.0, 0, 0, 0), "ln(t)"),
    ("sqrt(t - 2)", (1.0, 0, 0, 0), "sqrt(t - 2.0)"),
    ("1/(t - 1)", (1.0, 0, 0, 0), "1.0 / (t - 1.0)"),
    ("t^0.5", (-4.0, 0, 0, 0), "t ^ 0.5"),
])
def test_domain_errors_report_subexpression(src, point, needle):
    with pytest.raises(EvaluationDomainError) as err:
        evaluate_jet2(parse_expression(src, SYM), point)
    assert needle in str(err.value)


def test_abs_and_tanh_jets():
    j = evaluate_jet2(parse_expression("abs(t)", SYM), (-2.0, 0, 0, 0))
    assert j.value == 2.0 and j.grad[0] == -1.0
    j = evaluate_jet2(parse_expression("tanh(t)", SYM), (0.3, 0, 0, 0))
    th = math.tanh(0.3)
    assert abs(j.grad[0] - (1 - th * th)) < 1e-15


def test_value_matches_jet_value(rng):
    from oracles import random_expression
    for _ in range(25):
        src = random_expression(rng)
        pt = rng.uniform(-1.5, 1.5, 4)
        e = parse_expression(src, SYM)
        assert evaluate_value(e, pt) == evaluate_jet2(e, pt).value


@pytest.mark.parametrize("src,point", [
    ("tan(t)", (0.4, 0, 0, 0)),
    ("t ^ x", (1.7, 2.3, 0, 0)),        # varying exponent
    ("pow(2.2, t * x)", (0.6, -0.8, 0, 0)),
    ("t ^ 2.5", (1.9, 0, 0, 0)),        # non-integer constant exponent
    ("sqrt(t) * tan(x)", (2.25, 0.3, 0, 0)),
])
def test_special_function_jets_vs_fd(src, point):
    j = evaluate_jet2(parse_expression(src, SYM), point)
    f = expr_fn(src)
    assert rel_err(j.grad, fd_grad(f, point)) < 1e-6
    assert rel_err(j.hess, fd_hess(f, point)) < 1e-6


def test_sqrt_jet_at_zero_is_domain_error():
    with pytest.raises(EvaluationDomainError, match="derivative at zero"):
        evaluate_jet2(parse_expression("sqrt(t)", SYM), (0.0, 0, 0, 0))
    # value-only evaluation allows it (the quadrature integrand path)
    assert evaluate_value(parse_expression("sqrt(t)", SYM), (0.0, 0, 0, 0)) == 0.0


def test_huge_integer_exponent_fast_and_correct():
    j = evaluate_jet2(parse_expression("t^1000000", SYM), (1.0000001, 0, 0, 0))
    assert abs(j.grad[0] / j.value - 1000000 / 1.0000001) < 1e-3

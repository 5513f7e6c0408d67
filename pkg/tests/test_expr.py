import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pscvx import fixtures as fx
from pscvx.errors import DomainError, ExprSyntaxError, NonIntegerExponent, UnknownVariable
from pscvx.expr import eval_jet, evaluate, parse, symbolic_diff, to_text
from pscvx.hermitian import levi_form

from oracles import fd_gradient, fd_hessian, sympy_expr, sympy_jet

ENVELOPE_RHO = "abs2(2) + (abs2(1) - 1)^2 - 2"

# random smooth expressions in x1..x4 whose domain is all of R^4
leaf = st.sampled_from(["x1", "x2", "x3", "x4", "abs2(1)", "re(2)", "im(1)", "norm2", "pi",
                        "sqrt2", "0.5", "3", "1.25e-1"])


def _grow(children):
    unary = st.builds(lambda a: f"-({a})", children)
    binary = st.builds(lambda a, op, b: f"({a}) {op} ({b})", children, st.sampled_from("+-*"), children)
    pw = st.builds(lambda a, k: f"({a})^{k}", children, st.integers(0, 3))
    div = st.builds(lambda a, b: f"({a}) / (1 + ({b})^2)", children, children)
    fun = st.builds(lambda a: f"sqrt(2 + ({a})^2)", children) | \
        st.builds(lambda a: f"log(1 + ({a})^2)", children) | \
        st.builds(lambda a: f"exp(0.1*({a}))", children)
    return unary | binary | pw | div | fun


smooth = st.recursive(leaf, _grow, max_leaves=6)
points = arrays(np.float64, 4, elements=st.floats(-1, 1))


def fixture_expressions():
    out = []
    for name, spec in fx.fixtures().items():
        for ch in spec.charts:
            for p in ch.pieces:
                out.append((name, p.h, spec.n - 1))
    return out


# -- parsing ---------------------------------------------------------------------

def test_parse_examples():
    e = parse("abs2(1) - 1", 4)
    assert to_text(e) == "abs2(1) - 1"
    assert evaluate(e, np.array([0.6, 0.8, 5.0, 5.0])) == pytest.approx(0.0)
    env = parse(ENVELOPE_RHO, 4)
    z, w = 0.3 + 0.4j, -0.5 + 1.1j
    x = np.array([z.real, z.imag, w.real, w.imag])
    assert evaluate(env, x) == pytest.approx(abs(w) ** 2 + (abs(z) ** 2 - 1) ** 2 - 2)


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x1 +")
    assert err.value.offset == 4


@pytest.mark.parametrize("text,exc,offset", [
    ("x9", UnknownVariable, 0),
    ("abs(x1)", UnknownVariable, 0),
    ("x1^0.5", NonIntegerExponent, 3),
    ("(x1 + 2", ExprSyntaxError, None),
    ("x1 ** 2", ExprSyntaxError, None),
])
def test_rejections(text, exc, offset):
    with pytest.raises(exc) as err:
        parse(text, 4)
    if offset is not None:
        assert err.value.offset == offset


def test_precedence():
    x = np.array([2.0, 3.0, 0.0, 0.0])
    assert evaluate(parse("-x1^2", 4), x) == -4.0
    assert evaluate(parse("x1 - x2 - 1", 4), x) == -2.0
    assert evaluate(parse("x2 / x1 * 4", 4), x) == 6.0
    assert evaluate(parse("x1^2^1", 4), x) == 4.0
    assert evaluate(parse("sqrt2*sqrt2 - 2*pi/pi", 4), x) == pytest.approx(0.0, abs=1e-15)


@given(smooth)
def test_round_trip(text):
    e = parse(text, 4)
    assert parse(to_text(e), 4) == e


@given(smooth, points)
def test_evaluate_matches_sympy(text, x):
    e, xs = sympy_expr(text, 4)
    want = float(e.evalf(subs=dict(zip(xs, x))))
    assert evaluate(parse(text, 4), x) == pytest.approx(want, rel=1e-12, abs=1e-12)


# -- jets -------------------------------------------------------------------------

def test_jet_examples():
    j = eval_jet(parse("x1*x2", 2), np.array([3.0, 4.0]))
    assert j.value == 12.0
    assert np.array_equal(j.gradient, [4.0, 3.0])
    assert np.array_equal(j.hessian, [[0.0, 1.0], [1.0, 0.0]])
    j = eval_jet(parse(ENVELOPE_RHO, 4), np.array([0.0, 0.0, 1.0, 0.0]))
    # |w|^2 + (|z|^2 - 1)^2 - 2 at z = 0, w = 1 is 1 + 1 - 2 = 0
    assert j.value == 0.0
    assert np.allclose(levi_form(j).matrix, np.diag([-2.0, 1.0]))


def test_jet_domain_errors():
    with pytest.raises(DomainError):
        eval_jet(parse("log(x1)", 2), np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        eval_jet(parse("sqrt(x1 - 1)", 2), np.array([0.0, 1.0]))
    assert np.isnan(evaluate(parse("log(x1)", 2), np.array([-1.0, 0.0]), strict=False))


@given(smooth, points)
def test_jet_vs_symbolic_oracle(text, x):
    j = eval_jet(parse(text, 4), x)
    v, g, h = sympy_jet(text, 4, x)
    scale = max(1.0, abs(v), np.abs(g).max(), np.abs(h).max())
    assert abs(j.value - v) <= 1e-12 * scale
    assert np.abs(j.gradient - g).max() <= 1e-12 * scale
    assert np.abs(j.hessian - h).max() <= 1e-12 * scale
    assert np.array_equal(j.hessian, j.hessian.T)


@given(smooth, points)
def test_jet_vs_finite_differences(text, x):
    e = parse(text, 4)
    f = lambda p: float(evaluate(e, p))
    j = eval_jet(e, x)
    g = fd_gradient(f, x, h=1e-6)
    assert np.allclose(j.gradient, g, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(g).max()))
    h = fd_hessian(f, x, h=1e-4)
    assert np.allclose(j.hessian, h, rtol=1e-5, atol=1e-5 * max(1.0, np.abs(h).max()))


# -- symbolic differentiation --------------------------------------------------------

def test_symbolic_examples():
    assert symbolic_diff(parse("x1^2", 2), 0) == parse("2*x1", 2)
    assert to_text(symbolic_diff(parse("abs2(1)", 2), 0)) == "2*x1"


@given(smooth, points)
def test_symbolic_diff_matches_jet(text, x):
    e = parse(text, 4)
    g = eval_jet(e, x).gradient
    sym = np.array([evaluate(symbolic_diff(e, k), x) for k in range(4)])
    assert np.allclose(sym, g, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(g).max()))


@pytest.mark.parametrize("name,text,nvars", fixture_expressions())
def test_symbolic_diff_on_fixture_corpus(name, text, nvars, rng):
    e = text
    x = rng.uniform(-0.4, 0.4, size=(16, nvars))
    g = eval_jet(e, x).gradient
    for k in range(nvars):
        assert np.allclose(evaluate(symbolic_diff(e, k), x), g[:, k], rtol=1e-12, atol=1e-13)


@given(smooth, smooth, st.floats(-3, 3), points)
def test_symbolic_diff_is_linear(a, b, c, x):
    ea, eb = parse(a, 4), parse(b, 4)
    combo = parse(f"{c!r} * ({a}) + ({b})", 4)
    for k in range(4):
        lhs = evaluate(symbolic_diff(combo, k), x)
        rhs = c * evaluate(symbolic_diff(ea, k), x) + evaluate(symbolic_diff(eb, k), x)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spherical_dpw.analytic import as_fn, derivative, eval_complex, parse, taylor_coefficients
from spherical_dpw.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError


def test_polynomial_eval():
    assert parse("1 - s^4")(2.0) == pytest.approx(-15)
    assert eval_complex(parse("1 - s^4"), 1 + 0j) == pytest.approx(0)


def test_cos_at_zero():
    assert parse("cos(s^2)")(0.0) == pytest.approx(1)


def test_complex_argument():
    assert eval_complex(parse("s^2"), 1j) == pytest.approx(-1)


def test_unclosed_parenthesis_offset():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse("2 cosh(3 s")
    assert exc.value.offset == 6          # position of the unclosed "("
    assert ")" in exc.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as exc:
        parse("kapa + 1")
    assert exc.value.name == "kapa" and exc.value.offset == 0


@pytest.mark.parametrize("src, value", [
    ("2s", 2 * 0.7), ("0.5cos(s)", 0.5 * np.cos(0.7)), ("2 pi s", 2 * np.pi * 0.7),
    ("s^2^2", 0.7 ** 4), ("-s^2", -0.49), ("2^-1", 0.5), ("(s+1)(s-1)", 0.49 - 1),
    ("sqrt(1 - s^2)", np.sqrt(1 - 0.49)), ("exp(i pi)", -1.0), ("1e-1 s", 0.07),
])
def test_grammar(src, value):
    assert parse(src)(0.7) == pytest.approx(value)


def test_trailing_garbage():
    with pytest.raises(ExpressionSyntaxError):
        parse("s )")


def test_empty_input():
    with pytest.raises(ExpressionSyntaxError):
        parse("")


def test_division_by_zero_is_evaluation_error():
    with pytest.raises(EvaluationError):
        parse("1/s")(0.0)


def test_log_branch_cut_is_evaluation_error():
    with pytest.raises(EvaluationError):
        parse("log(s)")(-1.0)


def test_derivatives():
    assert derivative(parse("s"))(3.0) == pytest.approx(1)
    d = derivative(parse("1 - s^4"))
    for x in (-1.3, 0.2, 2.0):
        assert d(x) == pytest.approx(-4 * x ** 3)


def test_taylor_coefficients():
    c = taylor_coefficients(parse("exp(s)"), 0.0, 6)
    np.testing.assert_allclose(c, [1, 1, 1 / 2, 1 / 6, 1 / 24, 1 / 120])


def test_array_evaluation():
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(parse("s^3 - s")(x), x ** 3 - x)


def test_constant_coercion():
    assert as_fn(2.5)(10.0) == pytest.approx(2.5)
    assert as_fn(2.5).is_constant


coeffs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6)


def _poly_src(cs):
    return " + ".join(f"({c!r}) s^{k}" for k, c in enumerate(cs))


@given(coeffs)
def test_polynomial_derivative_vs_finite_difference(cs):
    f = parse(_poly_src(cs))
    d = f.derivative()
    h = 1e-5
    for x in np.linspace(-1.5, 1.5, 10):
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert abs(fd - d(x)) < 1e-7 * max(1.0, abs(d(x)))


@given(coeffs)
def test_real_on_real_axis(cs):
    f = parse(_poly_src(cs) + " + sin(s) cosh(s)")
    for x in np.linspace(-2, 2, 5):
        assert abs(complex(f(x)).imag) < 1e-14


@pytest.mark.parametrize("src", ["sin(s) + s^3", "exp(s) cos(s)", "1 / (2 + s^2)", "sqrt(4 + s)"])
def test_holomorphy_cauchy_riemann(src):
    f = parse(src)
    z0 = 0.3 + 0.2j
    errs = []
    for h in (1e-2, 5e-3):
        fx = (f(z0 + h) - f(z0 - h)) / (2 * h)
        fy = (f(z0 + 1j * h) - f(z0 - 1j * h)) / (2 * h)
        errs.append(abs(fx + 1j * fy))   # d/dzbar = (f_x + i f_y)/2 vanishes
        assert abs(fx - f.derivative()(z0)) < 10 * h * h
    assert errs[1] <= errs[0] / 3.5 or errs[1] < 1e-12

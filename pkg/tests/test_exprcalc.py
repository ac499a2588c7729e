import math

import numpy as np
import pytest

from gengauss import exprcalc
from gengauss.utils.errors import DomainError, ExprSyntaxError


@pytest.mark.parametrize("src,t,expected", [
    ("2*t^2 + 1", 3.0, 19.0),
    ("-t^2", 2.0, -4.0),
    ("2^3^2", 0.0, 512.0),
    ("t**2 - t", 4.0, 12.0),
    ("2^-2", 0.0, 0.25),
    ("1/(1+t^2)", 1.0, 0.5),
    ("sin(pi*t)", 0.5, 1.0),
    ("exp(log(t))", 2.5, 2.5),
    ("abs(t - 1)", -1.0, 2.0),
    ("sqrt(t) * e", 4.0, 2 * math.e),
])
def test_evaluate(src, t, expected):
    assert exprcalc.evaluate(src, t) == pytest.approx(expected, rel=1e-14)


def test_evaluate_arrays():
    values = exprcalc.evaluate("t^3", np.array([-1.0, 0.0, 2.0]))
    assert values == pytest.approx([-1.0, 0.0, 8.0])


def test_exp_jet_coefficients():
    jet = exprcalc.jet("exp(t)", 0.0, 6)
    assert jet.order == 6
    assert jet.coeffs == pytest.approx([1 / math.factorial(k) for k in range(7)])
    assert jet.derivatives() == pytest.approx(np.ones(7))


def test_trig_and_rational_derivatives():
    assert exprcalc.jet("sin(t)", 0.0, 3).derivatives() == pytest.approx([0, 1, 0, -1], abs=1e-15)
    assert exprcalc.derivative_values("1/(1+t)", 0.0, 3) == pytest.approx(-6.0)
    assert exprcalc.derivative_values("t^-2", 1.0, 1) == pytest.approx(-2.0)
    assert exprcalc.derivative_values("sqrt(t)", 4.0, 1) == pytest.approx(0.25)
    assert exprcalc.derivative_values("log(t)", 2.0, 2) == pytest.approx(-0.25)


def test_jets_match_finite_differences():
    f = "exp(-t) * cos(3*t) + t^5 / (2 + t)"
    t0, h = 0.3, 1e-5
    d1 = exprcalc.derivative_values(f, t0, 1)
    fd = (exprcalc.evaluate(f, t0 + h) - exprcalc.evaluate(f, t0 - h)) / (2 * h)
    assert d1 == pytest.approx(fd, rel=1e-8)


def test_jets_over_many_anchors():
    out = exprcalc.jets("t^2", [0.0, 1.0, 2.0], 2)
    assert out.shape == (3, 3)
    assert out[1] == pytest.approx([0.0, 2.0, 4.0])
    assert out[2] == pytest.approx([1.0, 1.0, 1.0])


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        exprcalc.parse("1/(1+")
    assert info.value.offset == 5


def test_unknown_function_suggestion():
    with pytest.raises(ExprSyntaxError, match="did you mean 'sin'"):
        exprcalc.parse("sinn(t)")
    with pytest.raises(ExprSyntaxError) as info:
        exprcalc.parse("t + $")
    assert info.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ExprSyntaxError, match="unknown identifier"):
        exprcalc.parse("x + 1")


def test_domain_errors():
    with pytest.raises(DomainError):
        exprcalc.evaluate("log(t)", -1.0)
    with pytest.raises(DomainError):
        exprcalc.evaluate("1/t", np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        exprcalc.jet("abs(t)", 0.0, 1)


def test_is_polynomial():
    assert exprcalc.is_polynomial("3*t^4 - t") == 4
    assert exprcalc.is_polynomial("(t+1)*(t-1)/2") == 2
    assert exprcalc.is_polynomial("7") == 0
    assert exprcalc.is_polynomial("exp(t)") is None
    assert exprcalc.is_polynomial("t^-2") is None
    assert exprcalc.is_polynomial("1/t") is None


@pytest.mark.parametrize("src,point", [
    ("1/t", 0.0),
    ("1/(t-0.3)", 0.3),
    ("exp(t)/(t^2 - 0.25)", -0.5),
    ("1/(t^2 - 2*t*0.4 + 0.16)", 0.4),
    ("1/sin(3*t)", 0.0),
    ("t^-2", 0.0),
    ("log(t + 0.7)", -0.7),
])
def test_singularities_inside_interval(src, point):
    found = exprcalc.singularities(src, -1.0, 1.0)
    assert found
    assert min(abs(x - point) for x, _ in found) < 1e-6
    with pytest.raises(DomainError, match="inside the support"):
        exprcalc.check_regular(src, -1.0, 1.0)


@pytest.mark.parametrize("src", ["1/(t-2)", "1/(1+t^2)", "abs(t)^3", "exp(t)*cos(3*t)", "sqrt(t+1)", "log(t+2)"])
def test_regular_expressions_pass(src):
    assert exprcalc.singularities(src, -1.0, 1.0) == []
    exprcalc.check_regular(src, -1.0, 1.0)


def test_singularities_on_half_line():
    assert exprcalc.singularities("1/(t-5)", 0.0, math.inf)[0][0] == pytest.approx(5.0)
    assert exprcalc.singularities("exp(-t)/(1+t)", 0.0, math.inf) == []


def test_negative_argument_is_reported():
    found = exprcalc.singularities("sqrt(t)", -1.0, 1.0)
    assert [why for _, why in found] == ["square root of a negative value"]
    assert exprcalc.singularities("sqrt(t)", 0.0, 1.0) == []

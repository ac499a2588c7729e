import numpy as np
import pytest

from gengauss.spline import function_moments, moment_spline, verify_spline_moments
from gengauss.utils.errors import DomainError


def test_exponential_linear_spline_preserves_moments():
    sd = moment_spline("exp(-t)", 1, 2)
    residuals = verify_spline_moments(sd, "exp(-t)", 6)
    assert np.all(residuals[:6] < 1e-9)
    assert residuals[6] > 1e-8
    assert sd.n == 2
    assert np.all((sd.knots > 0) & (sd.knots < 1))
    assert np.all(sd.jump_coeffs > 0)
    assert len(sd.endpoint_block) == 2


def test_quadratic_spline_is_smooth_at_knots():
    sd = moment_spline("1/(1+t)", 2, 1)
    assert np.all(verify_spline_moments(sd, "1/(1+t)", 4) < 1e-9)
    for k in (0, 1):
        left = sd.derivative(sd.knots, k, side="left")
        right = sd.derivative(sd.knots, k, side="right")
        assert left == pytest.approx(right, abs=1e-14)


def test_right_end_values_come_from_endpoint_block():
    sd = moment_spline("exp(-t)", 1, 2)
    assert sd.evaluate(1.0) == pytest.approx(sd.endpoint_block[0])
    assert sd.derivative(1.0, 1) == pytest.approx(sd.endpoint_block[1])


def test_function_moments():
    assert function_moments("t^2", 3) == pytest.approx([1 / 3, 1 / 4, 1 / 5, 1 / 6], rel=1e-13)


def test_sign_changing_measure_is_rejected():
    with pytest.raises(DomainError, match="not positive"):
        moment_spline("sin(6*t)", 1, 2)


def test_degenerate_measure_is_rejected():
    with pytest.raises(DomainError, match="degenerate"):
        moment_spline("t", 1, 2)


def test_sample_rows():
    frame = moment_spline("exp(-t)", 1, 2).sample(11)
    assert list(frame.columns) == ["t", "sigma"]
    assert len(frame) == 11
    assert frame["t"].iloc[-1] == 1.0

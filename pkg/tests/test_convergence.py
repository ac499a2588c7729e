import math

import numpy as np
import pytest

from gengauss.convergence import (
    cq_convergence_check, endpoint_enrichment_comparison, fit_rate, rate_study, schedule_for,
)

POLE_AT_TWO = (2 + math.sqrt(3)) ** -2
POLE_AT_I = (1 + math.sqrt(2)) ** -2


def test_schedule_rounds_half_up():
    assert schedule_for(0.5, 0.5, 3) == (2, 2)
    assert schedule_for(1.0, 0.0, 4) == (4, 0)
    assert schedule_for(0.25, 0.75, 2) == (1, 2)


def test_fit_rate_on_synthetic_errors():
    n = list(range(1, 11))
    errors = [3.0 * 0.1 ** k for k in n]
    rate, window = fit_rate(n, errors, [0.0] * len(n))
    assert rate == pytest.approx(0.1, rel=1e-10)
    assert window == list(range(3, 11))


def test_fit_rate_saturates_at_floor():
    n = list(range(1, 8))
    rate, window = fit_rate(n, [1e-15] * len(n), [1e-16] * len(n))
    assert rate is None
    assert window == []


def test_classical_rate(legendre):
    study = rate_study(legendre, "1/(t-2)", -math.log(3), (0.0, 0.0), range(1, 29), singularity=2.0)
    assert not study.saturated
    assert study.fitted_rate == pytest.approx(POLE_AT_TWO, rel=0.1)
    assert study.predicted_rate == pytest.approx(POLE_AT_TWO, rel=1e-10)
    frame = study.to_frame()
    assert list(frame.columns) == ["n", "r", "s", "abs_error", "roundoff_floor"]
    assert len(frame) == 28
    payload = study.to_dict()
    assert payload["schedule"] == {"alpha": 0.0, "beta": 0.0}
    assert payload["saturated"] is False


@pytest.mark.slow
def test_endpoint_derivatives_improve_the_rate(legendre):
    exact = math.pi / 2
    plain = rate_study(legendre, "1/(1+t^2)", exact, (0.0, 0.0), range(1, 19), singularity=1j)
    enriched = rate_study(legendre, "1/(1+t^2)", exact, (1.0, 1.0), range(1, 10), singularity=1j)
    assert plain.fitted_rate == pytest.approx(POLE_AT_I, rel=0.15)
    assert plain.fitted_rate <= 1.15 * plain.predicted_rate
    assert not enriched.saturated
    assert enriched.predicted_rate < plain.predicted_rate
    assert enriched.fitted_rate < 0.95 * plain.fitted_rate


def test_entire_function_saturates(legendre):
    study = rate_study(legendre, "exp(t)", math.e - 1 / math.e, (0.0, 0.0), range(8, 14))
    assert study.saturated
    assert study.fitted_rate is None


def test_cq_check_on_finitely_smooth_function(legendre):
    assert cq_convergence_check(legendre, "abs(t)^3", 1, 1, 20, exact_integral=0.5)


@pytest.mark.slow
def test_cq_check_with_three_derivatives_at_each_end(legendre):
    # f is only C^2, so the extra endpoint data must not spoil convergence
    assert cq_convergence_check(legendre, "abs(t)^3", 3, 3, 60, exact_integral=0.5)


def test_cq_check_fails_with_unreachable_tolerance(legendre):
    assert not cq_convergence_check(legendre, "abs(t)^3", 1, 1, 6, exact_integral=0.5, tol=1e-14)


def test_enrichment_comparison_is_sorted(legendre):
    table = endpoint_enrichment_comparison(legendre, "1/(t-2)", [(0.0, 0.0), (0.5, 0.5)], range(1, 15),
                                           exact_integral=-math.log(3), singularity=2.0)
    assert list(table.columns) == ["alpha", "beta", "fitted_rate", "predicted_rate", "saturated"]
    assert len(table) == 2
    rates = table["fitted_rate"].dropna().to_numpy()
    assert np.all(np.diff(rates) >= 0)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metricmaps.convergence import (
    DEFAULT_SCHEDULE,
    ConvergenceEstimate,
    check_schedule,
    estimate,
    fit_order,
    richardson_limit,
)
from metricmaps.errors import ArgumentError


@given(st.floats(0.2, 3), st.floats(0.01, 100))
def test_power_law_order_is_recovered(p, c):
    res = [c * e ** p for e in DEFAULT_SCHEDULE]
    est = estimate(DEFAULT_SCHEDULE, res)
    assert est.fitted_order == pytest.approx(p, rel=1e-9)
    assert est.verdict == "converges"


def test_negative_order_diverges():
    est = estimate(DEFAULT_SCHEDULE, [e ** -0.5 for e in DEFAULT_SCHEDULE])
    assert est.verdict == "diverges"
    assert est.fitted_order == pytest.approx(-0.5)


def test_zero_residuals_converge_without_order():
    est = estimate(DEFAULT_SCHEDULE, [0.0] * len(DEFAULT_SCHEDULE))
    assert est.verdict == "converges" and est.fitted_order is None


def test_flat_or_noisy_is_inconclusive():
    assert estimate(DEFAULT_SCHEDULE, [1.0] * 8).verdict == "inconclusive"
    zigzag = [e * (2 if i % 2 else 1) for i, e in enumerate(DEFAULT_SCHEDULE)]
    assert estimate(DEFAULT_SCHEDULE, zigzag).verdict == "inconclusive"


def test_fit_ignores_floor_entries():
    assert fit_order([0.5, 0.25], [0.0, 1e-13]) is None
    assert fit_order([0.5, 0.25, 0.125], [0.5, 0.25, 0.0]) == pytest.approx(1.0)


def test_estimate_validation():
    with pytest.raises(ValueError):
        ConvergenceEstimate((0.25, 0.5), (1, 1), None, "inconclusive")
    with pytest.raises(ValueError):
        ConvergenceEstimate((0.5, 0.25), (1,), None, "inconclusive")
    with pytest.raises(ValueError):
        ConvergenceEstimate((0.5, 0.25), (1, float("nan")), None, "inconclusive")


def test_check_schedule():
    assert check_schedule([0.5, 0.25]) == (0.5, 0.25)
    for bad in ([0.5], [0.5, 0.5], [1.0, 0.5], [0.5, 0.0]):
        with pytest.raises(ArgumentError):
            check_schedule(bad)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_richardson_is_exact_for_quadratics(a, b, c):
    vals = [a + b * e + c * e * e for e in DEFAULT_SCHEDULE]
    assert richardson_limit(DEFAULT_SCHEDULE, vals) == pytest.approx(a, abs=1e-9)


def test_richardson_on_arrays():
    vals = np.array([[1 + e, 2 - e] for e in DEFAULT_SCHEDULE])
    assert np.allclose(richardson_limit(DEFAULT_SCHEDULE, vals), [1, 2])


def test_to_dict_keys():
    d = estimate(DEFAULT_SCHEDULE, list(DEFAULT_SCHEDULE)).to_dict()
    assert set(d) == {"schedule", "residuals", "fittedOrder", "verdict"}

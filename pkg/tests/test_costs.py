import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from congames import CostValidationError, PolynomialCost, validate_cost


def test_identity_cost_accepted():
    cost = validate_cost([1.0])
    assert cost.derivative_lower == 1.0
    assert cost.second_derivative_upper == 0.0
    assert cost.envelope_lower == 1.0
    assert cost.envelope_upper == 1.0


def test_halved_identity_envelope_tightened():
    cost = validate_cost([0.5])
    # B + 1 = 1 would be valid, but the slope bound c'(1) = 1/2 is tighter.
    assert cost.envelope_upper == 0.5


def test_no_linear_term_rejected():
    # c(y) = y^2 has c'(0) = 0, breaking c' >= A > 0.
    with pytest.raises(CostValidationError, match="c'"):
        validate_cost([0.0, 1.0])


def test_constant_like_inputs_rejected():
    with pytest.raises(CostValidationError):
        validate_cost([])
    with pytest.raises(CostValidationError):
        PolynomialCost(())


def test_negative_coefficient_rejected():
    with pytest.raises(CostValidationError, match="negative"):
        validate_cost([0.5, -0.1])


def test_unit_value_bound_rejected():
    with pytest.raises(CostValidationError, match="exceeds 1"):
        validate_cost([0.9, 0.3])


def test_quadratic_derived_bounds():
    cost = validate_cost([0.5, 0.5])  # c(y) = (y + y^2)/2
    assert cost.derivative_lower == 0.5
    assert cost.second_derivative_upper == 1.0
    assert cost.envelope_upper == 1.5  # c'(1), below B + 1 = 2
    assert math.isclose(cost.value(1.0), 1.0)


coef_lists = st.lists(
    st.floats(min_value=0.0, max_value=0.2), min_size=0, max_size=2
).map(tuple)


@given(first=st.floats(min_value=1e-3, max_value=0.5), rest=coef_lists)
@settings(max_examples=200, deadline=None)
def test_certified_bounds_hold_on_grid(first, rest):
    cost = validate_cost((first,) + rest)
    grid = np.linspace(1e-9, 1.0, 101)
    a, b = cost.envelope_lower, cost.envelope_upper
    assert np.all(cost.slope(grid) >= a - 1e-12)
    assert np.all(cost.slope(grid) <= b + 1e-12)
    assert np.all(cost.curvature(grid) >= -1e-12)
    assert np.all(cost.curvature(grid) <= cost.second_derivative_upper + 1e-12)
    assert np.all(cost.value(grid) >= a * grid - 1e-12)
    assert np.all(cost.value(grid) <= b * grid + 1e-12)
    assert b <= cost.second_derivative_upper + 1.0 + 1e-12


@pytest.mark.parametrize("coefs", [(1.0,), (0.5, 0.5), (0.2, 0.1, 0.3)])
@pytest.mark.parametrize("upper", [0.25, 0.7, 1.0])
def test_primitive_matches_quadrature(coefs, upper):
    cost = PolynomialCost(coefs)
    oracle, err = quad(cost.value, 0.0, upper)
    assert math.isclose(cost.primitive(upper), oracle, rel_tol=1e-10, abs_tol=1e-12)


def test_slope_matches_finite_differences():
    cost = PolynomialCost((0.2, 0.1, 0.3))
    h = 1e-6
    for y in (0.1, 0.5, 0.9):
        fd = (cost.value(y + h) - cost.value(y - h)) / (2 * h)
        assert math.isclose(cost.slope(y), fd, rel_tol=1e-8)

"""Polynomial edge cost functions with certified slope and envelope bounds.

An edge cost is c(y) = sum_j coef[j] * y**(j+1), i.e. a polynomial with no
constant term and nonnegative coefficients.  That restriction makes every
bound we need exact: the derivative is minimized at 0, the second derivative
is maximized at 1, and the potential contribution has a closed-form
antiderivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CostValidationError(ValueError):
    """Raised when a cost function violates a required condition."""


# Slack for the c(1) <= 1 check only; coefficients themselves must be >= 0 exactly.
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class PolynomialCost:
    """One edge's cost function c(y) = sum_j coefficients[j-1] * y**j, j >= 1."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coefs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coefs)
        _check(len(coefs) >= 1, "cost has no coefficients")
        _check(all(np.isfinite(c) for c in coefs), "coefficient is not finite")
        _check(all(c >= 0.0 for c in coefs), "coefficient is negative")
        _check(coefs[0] > 0.0, "c'(0) = 0 violates c' >= A > 0 (linear coefficient must be positive)")
        _check(sum(coefs) <= 1.0 + _UNIT_TOL, f"c(1) = {sum(coefs)} exceeds 1")

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def derivative_lower(self) -> float:
        """A = min c' on [0,1].  c'' >= 0, so the minimum sits at y = 0."""
        return self.coefficients[0]

    @property
    def second_derivative_upper(self) -> float:
        """B = max c'' on [0,1], attained at y = 1 for nonnegative coefficients."""
        return float(sum(j * (j - 1) * c for j, c in self._terms()))

    @property
    def envelope_lower(self) -> float:
        """Largest a with a*y <= c(y) on [0,1]; equals A since c(y)/y is nondecreasing."""
        return self.derivative_lower

    @property
    def envelope_upper(self) -> float:
        """Tightest b with both c(y) <= b*y and c'(y) <= b on [0,1].

        Both constraints are needed downstream (the envelope for the value
        bounds, the slope for the curvature and equilibrium-gap bounds), and
        c'(1) = sum_j j*coef_j satisfies both.  It never exceeds the generic
        B + 1 bound because c'(1) <= coef_1 + B <= 1 + B.
        """
        return float(sum(j * c for j, c in self._terms()))

    def _terms(self):
        return ((j + 1, c) for j, c in enumerate(self.coefficients))

    def value(self, y):
        """c(y); accepts scalars or arrays."""
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * y + c
        return acc * y

    def slope(self, y):
        """c'(y)."""
        acc = 0.0
        for j, c in reversed(list(enumerate(self.coefficients, start=1))):
            acc = acc * y + j * c
        return acc

    def curvature(self, y):
        """c''(y)."""
        if self.degree < 2:
            return np.zeros_like(np.asarray(y, dtype=float))
        acc = 0.0
        for j, c in reversed(list(enumerate(self.coefficients, start=1))):
            if j >= 2:
                acc = acc * y + j * (j - 1) * c
        return acc

    def primitive(self, y):
        """Antiderivative F(y) = integral of c from 0 to y, F(0) = 0."""
        acc = 0.0
        for j, c in reversed(list(enumerate(self.coefficients, start=1))):
            acc = acc * y + c / (j + 1)
        return acc * y * y


def _check(cond: bool, reason: str) -> None:
    if not cond:
        raise CostValidationError(reason)


def validate_cost(coefficients) -> PolynomialCost:
    """Accept or reject a coefficient list, returning the certified cost.

    Rejection raises CostValidationError carrying the violated condition.
    Acceptance certifies, by construction, that c(0) = 0, c(1) <= 1,
    c'(y) >= A > 0 and 0 <= c''(y) <= B on [0,1], and that
    a*y <= c(y) <= b*y with a = A and b = envelope_upper <= B + 1.
    """
    seq = tuple(float(c) for c in np.atleast_1d(np.asarray(coefficients, dtype=float)))
    cost = PolynomialCost(seq)
    # Direct numeric audit of the analytic envelope on a dense grid.
    grid = np.linspace(1e-9, 1.0, 257)
    vals = cost.value(grid)
    a, b = cost.envelope_lower, cost.envelope_upper
    _check(bool(np.all(vals >= a * grid - 1e-12)), "lower envelope a*y <= c(y) failed")
    _check(bool(np.all(vals <= b * grid + 1e-12)), "upper envelope c(y) <= b*y failed")
    _check(bool(np.all(cost.slope(grid) <= b + 1e-12)), "slope bound c'(y) <= b failed")
    return cost

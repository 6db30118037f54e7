"""Geometric-mean forecast accuracy test and binomial sign test.

Ratios ``x_i = observed_i / forecast_i`` are tested for a geometric mean of
one: Shapiro-Wilk on ``log x_i`` gates a one-sample t-test of
``mean(log x_i) == 0``. A Monte Carlo engine compares its power with the
exact two-sided sign test on lognormal and gamma data.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DegenerateError, DomainError, GMAccuracyError
from .stattests import (
    AccuracyVerdict,
    Outcome,
    RatioSample,
    TestReport,
    accuracy_test,
    binomial_sign_test,
    binomial_two_sided_p,
    box_cox,
    geometric_mean,
    make_ratio_sample,
    shapiro_wilk,
    t_test_mu0,
)

__all__ = [
    "AccuracyVerdict",
    "ConvergenceError",
    "DegenerateError",
    "DomainError",
    "GMAccuracyError",
    "Outcome",
    "RatioSample",
    "TestReport",
    "accuracy_test",
    "binomial_sign_test",
    "binomial_two_sided_p",
    "box_cox",
    "geometric_mean",
    "make_ratio_sample",
    "shapiro_wilk",
    "t_test_mu0",
]

"""Forecast accuracy tests on observed/forecast ratios.

The accuracy test works on log-ratios: a Shapiro-Wilk check that they are
normal, then a one-sample t-test that their mean is zero (geometric mean of
the ratios equal to one). The binomial sign test is the usual comparator.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DegenerateError, DomainError
from .specfn import _normal_sf_array, _t_two_sided_array, ln_gamma, normal_quantile

DEFAULT_ALPHA = 0.05

SW_MIN_N = 3
SW_MAX_N = 5000

# Spread below this fraction of the largest magnitude is rounding noise.
_DEGENERATE_RTOL = 1e-12

_LN2 = math.log(2.0)


class DuplicateRatioWarning(UserWarning):
    """Ratios contain exact repeats, which a continuous model excludes."""


class Outcome(str, enum.Enum):
    INACCURATE = "Inaccurate"
    NOT_REJECTED = "NotRejected"
    NORMALITY_REJECTED = "NormalityRejected"


@dataclass(frozen=True)
class TestReport:
    """Result of one hypothesis test at level ``alpha``."""

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    alpha: float
    reject: bool
    method: str
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(
            statistic=float(d["statistic"]),
            p_value=float(d["p_value"]),
            alpha=float(d["alpha"]),
            reject=bool(d["reject"]),
            method=str(d["method"]),
            notes=tuple(d.get("notes", ())),
        )


def _report(statistic: float, p_value: float, alpha: float, method: str, notes=()) -> TestReport:
    p_value = min(max(float(p_value), 0.0), 1.0)
    return TestReport(float(statistic), p_value, float(alpha), p_value <= alpha, method, tuple(notes))


@dataclass(frozen=True)
class AccuracyVerdict:
    normality: TestReport
    location: Optional[TestReport]
    outcome: Outcome


@dataclass(frozen=True, eq=False)
class RatioSample:
    """Observed values, forecasts, and their ratios and log-ratios."""

    observed: np.ndarray
    forecast: np.ndarray
    ratios: np.ndarray
    log_ratios: np.ndarray
    duplicate_ratios: bool = False

    @property
    def n(self) -> int:
        return len(self.ratios)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def make_ratio_sample(observed, forecast) -> RatioSample:
    """Validate observed/forecast pairs and compute ratios ``s_i / r_i``.

    Exact duplicate ratios are allowed but flagged, both on the returned
    sample and with a :class:`DuplicateRatioWarning`.
    """
    s = np.array(observed, dtype=float).ravel()
    r = np.array(forecast, dtype=float).ravel()
    if s.shape != r.shape:
        raise DomainError(f"observed and forecast lengths differ ({s.size} vs {r.size})")
    if s.size < 3:
        raise DomainError(f"need at least 3 pairs, got {s.size}")
    for name, v in (("observed", s), ("forecast", r)):
        bad = np.flatnonzero(~(np.isfinite(v) & (v > 0)))
        if bad.size:
            raise DomainError(f"{name} values must be finite and > 0 (first bad index {bad[0]})")
    x = s / r
    y = np.log(x)
    duplicates = np.unique(x).size < x.size
    if duplicates:
        warnings.warn("ratios contain exact duplicates", DuplicateRatioWarning, stacklevel=2)
    for v in (s, r, x, y):
        v.flags.writeable = False
    return RatioSample(s, r, x, y, duplicates)


def geometric_mean(sample) -> float:
    """Sample geometric mean, computed as ``exp(mean(log x))``.

    Accepts a :class:`RatioSample` or any sequence of positive numbers.
    """
    if isinstance(sample, RatioSample):
        logs = sample.log_ratios
    else:
        x = np.asarray(sample, dtype=float).ravel()
        if x.size == 0 or np.any(~(x > 0)):
            raise DomainError("geometric mean needs a non-empty sample of positive values")
        logs = np.log(x)
    return math.exp(math.fsum(logs) / len(logs))


def box_cox(x, lmbda: float) -> np.ndarray:
    """Box-Cox transform ``(x**lmbda - 1) / lmbda``; ``log x`` at ``lmbda == 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Box-Cox requires strictly positive values")
    if lmbda == 0:
        return np.log(x)
    return np.expm1(lmbda * np.log(x)) / lmbda


# -- Shapiro-Wilk, Royston's AS R94 -----------------------------------------

_SW_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def _poly(coef, x):
    # coefficients in ascending order of power
    result = coef[-1]
    for c in reversed(coef[:-1]):
        result = result * x + c
    return result


@lru_cache(maxsize=64)
def _sw_weights(n: int) -> np.ndarray:
    """Full antisymmetric weight vector for sorted samples of size ``n``."""
    half = n // 2
    a = np.zeros(half)
    if n == 3:
        a[0] = math.sqrt(0.5)
    else:
        m = np.array([normal_quantile((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
        summ2 = 2.0 * float(np.dot(m, m))
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_SW_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_SW_C2, rsn)
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2) / (1.0 - 2.0 * a1**2 - 2.0 * a2**2))
            a[1] = a2
            start = 2
        else:
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
            start = 1
        a[0] = a1
        a[start:] = -m[start:] / fac
    full = np.zeros(n)
    full[:half] = -a
    full[n - half :] = a[::-1]
    full.flags.writeable = False
    return full


def _check_sw_size(n: int):
    if not SW_MIN_N <= n <= SW_MAX_N:
        raise DomainError(f"Shapiro-Wilk needs {SW_MIN_N} <= n <= {SW_MAX_N}, got n={n}")


def _shapiro_wilk_batch(samples) -> tuple[np.ndarray, np.ndarray]:
    """W statistics and p-values for each row of a 2-D array."""
    x = np.sort(np.asarray(samples, dtype=float), axis=1)
    reps, n = x.shape
    _check_sw_size(n)
    spread = x[:, -1] - x[:, 0]
    scale = np.max(np.abs(x), axis=1)
    if np.any(~(spread > _DEGENERATE_RTOL * scale)):
        raise DegenerateError("Shapiro-Wilk is undefined for a sample with zero spread")

    a = _sw_weights(n)
    asa = a - a.mean()
    xs = x / spread[:, None]
    xsx = xs - xs.mean(axis=1, keepdims=True)
    ssa = float(np.dot(asa, asa))
    ssx = np.einsum("ij,ij->i", xsx, xsx)
    sax = xsx @ asa
    ssassx = np.sqrt(ssa * ssx)
    w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx)
    w = 1.0 - w1

    if n == 3:
        p = (6.0 / math.pi) * (np.arcsin(np.sqrt(np.clip(w, 0.0, 1.0))) - math.pi / 3.0)
        return w, np.clip(p, 0.0, 1.0)

    with np.errstate(divide="ignore"):
        y = np.log(w1)
    if n <= 11:
        gamma = _poly(_SW_G, n)
        p = np.full(reps, 1e-99)
        ok = y < gamma
        yt = -np.log(gamma - y[ok])
        mean = _poly(_SW_C3, n)
        sd = math.exp(_poly(_SW_C4, n))
        p[ok] = _normal_sf_array((yt - mean) / sd)
    else:
        ln_n = math.log(n)
        mean = _poly(_SW_C5, ln_n)
        sd = math.exp(_poly(_SW_C6, ln_n))
        p = _normal_sf_array((y - mean) / sd)
    return w, np.clip(p, 0.0, 1.0)


def shapiro_wilk(y, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Shapiro-Wilk normality test (Royston's AS R94 approximation).

    Valid for ``3 <= n <= 5000``. A small p-value is evidence against
    normality.
    """
    alpha = _check_alpha(alpha)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DomainError("sample contains non-finite values")
    w, p = _shapiro_wilk_batch(y[None, :])
    return _report(w[0], p[0], alpha, "Shapiro-Wilk")


# -- one-sample t-test --------------------------------------------------------


def _t_test_batch(samples) -> tuple[np.ndarray, np.ndarray]:
    """t statistics and two-sided p-values for ``mean == 0``, one per row."""
    y = np.asarray(samples, dtype=float)
    n = y.shape[1]
    if n < 2:
        raise DomainError(f"t-test needs n >= 2, got n={n}")
    mean = y.mean(axis=1)
    sd = y.std(axis=1, ddof=1)
    scale = np.max(np.abs(y), axis=1)
    if np.any(~(sd > _DEGENERATE_RTOL * scale)):
        raise DegenerateError(
            "log-ratios have zero variance (every forecast is off by the same factor); "
            "the geometric mean is exact and no test is possible"
        )
    t = mean * math.sqrt(n) / sd
    return t, _t_two_sided_array(t, n - 1.0)


def t_test_mu0(y, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Two-sided one-sample t-test of ``mean(y) == 0``.

    ``T = mean(y) * sqrt(n) / s`` with ``s`` the ``n - 1`` standard
    deviation; the p-value comes from Student's t with ``n - 1`` degrees
    of freedom.
    """
    alpha = _check_alpha(alpha)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DomainError("sample contains non-finite values")
    t, p = _t_test_batch(y[None, :])
    return _report(t[0], p[0], alpha, "t-test (mean log-ratio = 0)")


# -- binomial sign test -------------------------------------------------------

_EXACT_MAX_N = 64


def _ln_choose(n: int, k: int) -> float:
    return ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)


def _two_sided_tail_exact(n: int, lo: int, hi: int) -> float:
    """``2 P(lo <= B <= hi)`` for ``B ~ Binomial(n, 1/2)`` by integer arithmetic."""
    count = sum(math.comb(n, k) for k in range(lo, hi + 1))
    return float(Fraction(count, 1 << (n - 1)))


def _two_sided_tail_log(n: int, lo: int, hi: int) -> float:
    """Same quantity as :func:`_two_sided_tail_exact`, summed in log space."""
    logs = [_ln_choose(n, k) - (n - 1) * _LN2 for k in range(lo, hi + 1)]
    top = max(logs)
    return math.exp(top) * math.fsum(math.exp(v - top) for v in logs)


def binomial_two_sided_p(n: int, b: int) -> float:
    """Exact two-sided p-value for ``b`` successes out of ``n`` at ``p = 1/2``.

    Doubles the tail on the side of ``b``; ``b == n/2`` gives 1, and the
    doubled tail is capped at 1.
    """
    n, b = int(n), int(b)
    if n < 1 or not 0 <= b <= n:
        raise DomainError(f"need n >= 1 and 0 <= b <= n, got n={n}, b={b}")
    if 2 * b == n:
        return 1.0
    lo, hi = (b, n) if 2 * b > n else (0, b)
    if n <= _EXACT_MAX_N:
        p = _two_sided_tail_exact(n, lo, hi)
    else:
        p = _two_sided_tail_log(n, lo, hi)
    return min(p, 1.0)


@lru_cache(maxsize=64)
def _binomial_p_table(n: int) -> np.ndarray:
    table = np.array([binomial_two_sided_p(n, b) for b in range(n + 1)])
    table.flags.writeable = False
    return table


def binomial_sign_test(ratios, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Two-sided sign test on the number of ratios strictly above 1.

    The statistic is that count ``b``. Ratios exactly equal to 1 count as
    not above 1; when any occur, the report carries a note saying so.
    """
    alpha = _check_alpha(alpha)
    if isinstance(ratios, RatioSample):
        ratios = ratios.ratios
    x = np.asarray(ratios, dtype=float).ravel()
    if x.size < 1:
        raise DomainError("sign test needs at least one ratio")
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise DomainError("ratios must be finite and > 0")
    b = int(np.count_nonzero(x > 1.0))
    ties = int(np.count_nonzero(x == 1.0))
    notes = (f"{ties} ratio(s) equal to 1 counted as not above 1",) if ties else ()
    return _report(b, binomial_two_sided_p(x.size, b), alpha, "binomial sign test", notes)


# -- composite procedure ------------------------------------------------------


def accuracy_test(sample: RatioSample, alpha: float = DEFAULT_ALPHA) -> AccuracyVerdict:
    """Run the normality gate and, if it passes, the t-test on log-ratios.

    Shapiro-Wilk p <= alpha stops the procedure with
    ``Outcome.NORMALITY_REJECTED``; otherwise the t-test decides between
    ``INACCURATE`` and ``NOT_REJECTED``.
    """
    alpha = _check_alpha(alpha)
    normality = shapiro_wilk(sample.log_ratios, alpha)
    if normality.reject:
        return AccuracyVerdict(normality, None, Outcome.NORMALITY_REJECTED)
    location = t_test_mu0(sample.log_ratios, alpha)
    outcome = Outcome.INACCURATE if location.reject else Outcome.NOT_REJECTED
    return AccuracyVerdict(normality, location, outcome)

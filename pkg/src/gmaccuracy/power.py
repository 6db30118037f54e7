"""Monte Carlo power study of the accuracy test against the sign test.

Each point of a power curve is estimated from its own random stream
(``seed``, grid index), so results depend only on the scenario and the
seed: points can be computed in any order or in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .distributions import (
    GammaParams,
    LogNormalParams,
    RngStream,
    _standard_gamma,
    gm_gamma_ratio,
)
from .errors import DomainError
from .specfn import digamma, inverse_digamma
from .stattests import (
    DEFAULT_ALPHA,
    _binomial_p_table,
    _shapiro_wilk_batch,
    _t_test_batch,
)

DEFAULT_REPS = 10_000
TABLE1_REPS = 100_000
DEFAULT_GRID_POINTS = 21

# Replications are simulated in blocks of this size. The block size is part
# of the draw order, so changing it changes the random numbers used.
CHUNK_REPS = 2_000

GATE_POLICIES = ("non_rejection", "rejection", "ungated")

# (case, a, b, n) in reference row order.
TABLE1_CASES = (
    (1, 3.0, 1.0, 20),
    (2, 3.0, 5.0, 20),
    (3, 3.0, 10.0, 20),
    (4, 3.0, 1.0, 100),
    (5, 3.0, 5.0, 100),
    (6, 3.0, 10.0, 100),
    (7, 1.0, 3.0, 20),
    (8, 5.0, 3.0, 20),
    (9, 10.0, 3.0, 20),
    (10, 1.0, 3.0, 100),
    (11, 5.0, 3.0, 100),
    (12, 10.0, 3.0, 100),
)


def _positive(value, name):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class LogNormalRatio:
    """Lognormal forecasts and outcomes with ``theta_S = theta_R`` and ``mu_R = 0``."""

    theta_R: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        _positive(self.theta_R, "theta_R")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho!r}")


@dataclass(frozen=True)
class GammaFixedShape:
    """Independent Gamma S and R sharing shape ``a``; bias enters through ``b_R``."""

    a: float = 3.0
    b_S: float = 1.0

    def __post_init__(self):
        _positive(self.a, "a")
        _positive(self.b_S, "b_S")


@dataclass(frozen=True)
class GammaFixedRate:
    """Independent Gamma S and R sharing rate ``b``; bias enters through ``a_S``."""

    b: float = 3.0
    a_R: float = 1.0

    def __post_init__(self):
        _positive(self.b, "b")
        _positive(self.a_R, "a_R")


Family = Union[LogNormalRatio, GammaFixedShape, GammaFixedRate]
FAMILIES = {cls.__name__: cls for cls in (LogNormalRatio, GammaFixedShape, GammaFixedRate)}


def default_beta_grid(family: Family, num: int = DEFAULT_GRID_POINTS) -> tuple:
    half_width = 0.2 if isinstance(family, LogNormalRatio) else 0.7
    return tuple(float(b) for b in np.linspace(-half_width, half_width, num))


@dataclass(frozen=True)
class PowerScenario:
    family: Family
    beta_grid: tuple
    n: int
    reps: int = DEFAULT_REPS
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    normality_gate: str = "non_rejection"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        if not isinstance(self.family, tuple(FAMILIES.values())):
            raise DomainError(f"unknown family {self.family!r}")
        if not self.beta_grid:
            raise DomainError("beta_grid is empty")
        if any(not (b > -1.0 and math.isfinite(b)) for b in self.beta_grid):
            raise DomainError("every beta must be finite and > -1")
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"n must be an integer >= 3, got {self.n!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise DomainError(f"reps must be an integer >= 1, got {self.reps!r}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0 <= int(self.seed) < 1 << 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.normality_gate not in GATE_POLICIES:
            raise DomainError(f"normality_gate must be one of {GATE_POLICIES}")


@dataclass(frozen=True)
class PowerPoint:
    """Estimated rejection rates at one value of ``beta``.

    ``reject_rate_accuracy`` follows the scenario's normality-gate policy;
    ``reject_rate_ttest`` is the t-test alone, ignoring the gate.
    """

    beta: float
    reject_rate_accuracy: float
    reject_rate_binomial: float
    normality_gate_rate: float
    reject_rate_ttest: float
    mc_std_err_accuracy: float
    mc_std_err_binomial: float
    reps: int


@dataclass(frozen=True)
class ScenarioParams:
    """Concrete sampling parameters for ``S`` (outcome) and ``R`` (forecast)."""

    s: Union[LogNormalParams, GammaParams]
    r: Union[LogNormalParams, GammaParams]
    rho: float = 0.0


def calibrate_scenario(family: Family, beta: float) -> ScenarioParams:
    """Parameters for which the ratio ``S/R`` has geometric mean ``1 + beta``."""
    beta = float(beta)
    if not beta > -1.0:
        raise DomainError(f"beta must be > -1, got {beta!r}")
    if isinstance(family, LogNormalRatio):
        r = LogNormalParams(0.0, family.theta_R)
        s = LogNormalParams(math.log1p(beta), family.theta_R)
        return ScenarioParams(s, r, family.rho)
    if isinstance(family, GammaFixedShape):
        return ScenarioParams(
            GammaParams(family.a, family.b_S),
            GammaParams(family.a, (1.0 + beta) * family.b_S),
        )
    if isinstance(family, GammaFixedRate):
        a_s = inverse_digamma(math.log1p(beta) + digamma(family.a_R))
        return ScenarioParams(GammaParams(a_s, family.b), GammaParams(family.a_R, family.b))
    raise DomainError(f"unknown family {family!r}")


def _draw_pairs(params: ScenarioParams, stream: RngStream, shape) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(params.s, LogNormalParams):
        z1 = stream.standard_normal(shape)
        z2 = stream.standard_normal(shape)
        rho = params.rho
        log_s = params.s.mu + math.sqrt(params.s.theta) * z1
        log_r = params.r.mu + math.sqrt(params.r.theta) * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
        return np.exp(log_s), np.exp(log_r)
    count = shape[0] * shape[1]
    s = _standard_gamma(params.s.a, stream, count).reshape(shape) / params.s.b
    r = _standard_gamma(params.r.a, stream, count).reshape(shape) / params.r.b
    return s, r


def _std_err(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / reps)


def run_power_point(scenario: PowerScenario, beta: float, stream_id: int = 0) -> PowerPoint:
    """Estimate both tests' rejection rates at one ``beta``.

    Every replication draws ``n`` pairs, forms the ratios, and applies the
    accuracy test and the sign test to the same sample.
    """
    params = calibrate_scenario(scenario.family, beta)
    stream = RngStream(scenario.seed, stream_id)
    n, alpha = scenario.n, scenario.alpha
    binom_table = _binomial_p_table(n)

    gate = ttest = binom = gated_reject = 0
    remaining = scenario.reps
    while remaining:
        m = min(CHUNK_REPS, remaining)
        remaining -= m
        s, r = _draw_pairs(params, stream, (m, n))
        x = s / r
        y = np.log(x)
        _, p_sw = _shapiro_wilk_batch(y)
        _, p_t = _t_test_batch(y)
        p_b = binom_table[np.count_nonzero(x > 1.0, axis=1)]
        normal_rejected = p_sw <= alpha
        t_rejected = p_t <= alpha
        gate += int(np.count_nonzero(normal_rejected))
        ttest += int(np.count_nonzero(t_rejected))
        binom += int(np.count_nonzero(p_b <= alpha))
        gated_reject += int(np.count_nonzero(t_rejected & ~normal_rejected))

    reps = scenario.reps
    if scenario.normality_gate == "ungated":
        acc = ttest
    elif scenario.normality_gate == "rejection":
        acc = gated_reject + gate
    else:
        acc = gated_reject
    rate_acc, rate_binom = acc / reps, binom / reps
    return PowerPoint(
        beta=float(beta),
        reject_rate_accuracy=rate_acc,
        reject_rate_binomial=rate_binom,
        normality_gate_rate=gate / reps,
        reject_rate_ttest=ttest / reps,
        mc_std_err_accuracy=_std_err(rate_acc, reps),
        mc_std_err_binomial=_std_err(rate_binom, reps),
        reps=reps,
    )


def _point_task(args):
    scenario, index = args
    return run_power_point(scenario, scenario.beta_grid[index], stream_id=index)


def _run_tasks(func, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def run_power_curve(scenario: PowerScenario, workers: int = 1) -> list[PowerPoint]:
    """One :class:`PowerPoint` per grid value, in grid order.

    ``workers > 1`` spreads grid points over processes; output is identical
    for any worker count.
    """
    tasks = [(scenario, i) for i in range(len(scenario.beta_grid))]
    return _run_tasks(_point_task, tasks, workers)


@dataclass(frozen=True)
class Table1Row:
    case: int
    a: float
    b: float
    n: int
    reject_pct: float
    mc_std_err_pct: float
    reps: int = field(default=TABLE1_REPS)


def shapiro_reject_rate(
    params: GammaParams,
    n: int,
    reps: int,
    stream: RngStream,
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Fraction of samples of ``log(S/R)``, S and R iid ``params``, failing Shapiro-Wilk."""
    rejected = 0
    remaining = reps
    while remaining:
        m = min(CHUNK_REPS, remaining)
        remaining -= m
        s = _standard_gamma(params.a, stream, m * n).reshape(m, n) / params.b
        r = _standard_gamma(params.a, stream, m * n).reshape(m, n) / params.b
        _, p = _shapiro_wilk_batch(np.log(s / r))
        rejected += int(np.count_nonzero(p <= alpha))
    return rejected / reps


def _table1_task(args):
    (case, a, b, n), reps, seed, alpha = args
    rate = shapiro_reject_rate(GammaParams(a, b), n, reps, RngStream(seed, case - 1), alpha)
    return Table1Row(case, a, b, n, 100.0 * rate, 100.0 * _std_err(rate, reps), reps)


def run_table1(
    reps: int = TABLE1_REPS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    workers: int = 1,
) -> list[Table1Row]:
    """Shapiro-Wilk rejection percentages for log-ratios of iid Gamma pairs.

    Row ``k`` (1-based) uses stream ``k - 1`` of ``seed``.
    """
    if int(reps) != reps or reps < 1:
        raise DomainError(f"reps must be an integer >= 1, got {reps!r}")
    tasks = [(case, int(reps), int(seed), float(alpha)) for case in TABLE1_CASES]
    return _run_tasks(_table1_task, tasks, workers)


def gm_ratio_check(params: ScenarioParams) -> float:
    """Closed-form geometric mean of ``S/R`` for calibrated parameters."""
    if isinstance(params.s, LogNormalParams):
        return math.exp(params.s.mu - params.r.mu)
    return gm_gamma_ratio(params.s, params.r)

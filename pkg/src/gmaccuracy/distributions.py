"""Random variate generation and geometric-mean calculators.

Gamma variables use the rate parametrization throughout: ``Gamma(a, b)``
has density ``b**a / Gamma(a) * z**(a-1) * exp(-b*z)`` and mean ``a/b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfn import digamma, ln_gamma, trigamma

_UINT64 = 1 << 64


@dataclass(frozen=True)
class LogNormalParams:
    """``log X ~ Normal(mu, theta)``; ``theta`` is a variance."""

    mu: float = 0.0
    theta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.theta)):
            raise DomainError("lognormal parameters must be finite")
        if self.theta <= 0:
            raise DomainError(f"theta must be > 0, got {self.theta!r}")


@dataclass(frozen=True)
class GammaParams:
    """Shape ``a`` and rate ``b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0) or math.isinf(self.a) or math.isinf(self.b):
            raise DomainError(f"gamma parameters must be finite and > 0, got a={self.a!r}, b={self.b!r}")


@dataclass(frozen=True)
class LogCorrelation:
    """Linear correlation between ``log S`` and ``log R``."""

    rho: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho!r}")


def _as_rho(rho) -> float:
    if isinstance(rho, LogCorrelation):
        return rho.rho
    return LogCorrelation(float(rho)).rho


class RngStream:
    """A deterministic random stream identified by ``(seed, stream_id)``.

    Backed by the counter-based Philox4x64 generator keyed with
    ``seed + 2**64 * stream_id``, so distinct stream ids give
    non-overlapping sequences and creating any stream is O(1).
    Two streams built from the same pair yield identical draws.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed < _UINT64 and 0 <= stream_id < _UINT64):
            raise DomainError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        self.generator = np.random.Generator(np.random.Philox(key=seed + (stream_id << 64)))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)


def sample_std_normal(stream: RngStream, size=None):
    """Standard normal variates (numpy's ziggurat on the stream's Philox bits)."""
    out = stream.standard_normal(size)
    return float(out) if size is None else out


def sample_correlated_lognormal_pair(
    s_params: LogNormalParams,
    r_params: LogNormalParams,
    rho,
    stream: RngStream,
    size=None,
):
    """Draw ``(S, R)`` with jointly normal logs and log-correlation ``rho``.

    ``log S = mu_S + sqrt(theta_S) Z1`` and
    ``log R = mu_R + sqrt(theta_R) (rho Z1 + sqrt(1 - rho^2) Z2)``.
    """
    rho = _as_rho(rho)
    z1 = stream.standard_normal(size)
    z2 = stream.standard_normal(size)
    log_s = s_params.mu + math.sqrt(s_params.theta) * z1
    log_r = r_params.mu + math.sqrt(r_params.theta) * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    s, r = np.exp(log_s), np.exp(log_r)
    if size is None:
        return float(s), float(r)
    return s, r


def _standard_gamma(shape: float, stream: RngStream, count: int) -> np.ndarray:
    # Marsaglia & Tsang (2000); shapes below 1 are boosted by U**(1/a).
    boost = shape < 1.0
    d = (shape + 1.0 if boost else shape) - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(count)
    todo = np.arange(count)
    while todo.size:
        m = todo.size
        x = stream.standard_normal(m)
        u = stream.uniform(m)
        v = 1.0 + c * x
        v = v * v * v
        positive = v > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_v = np.log(np.where(positive, v, 1.0))
            x2 = x * x
            accept = positive & (
                (u < 1.0 - 0.0331 * x2 * x2) | (np.log(u) < 0.5 * x2 + d * (1.0 - v + log_v))
            )
        out[todo[accept]] = d * v[accept]
        todo = todo[~accept]
    if boost:
        out *= stream.uniform(count) ** (1.0 / shape)
    return out


def sample_gamma(params: GammaParams, stream: RngStream, size=None):
    """Gamma(a, b) variates, rate parametrization."""
    shape = () if size is None else ((size,) if np.ndim(size) == 0 else tuple(size))
    count = int(np.prod(shape, dtype=np.int64))
    out = _standard_gamma(params.a, stream, count).reshape(shape) / params.b
    return float(out) if size is None else out


def gm_lognormal(params: LogNormalParams) -> float:
    return math.exp(params.mu)


def gm_gamma(params: GammaParams) -> float:
    """Geometric mean ``exp(digamma(a)) / b`` of a Gamma(a, b) variable."""
    return math.exp(digamma(params.a)) / params.b


def gm_gamma_ratio(s: GammaParams, r: GammaParams) -> float:
    """Geometric mean of ``S / R`` for Gamma ``S`` and ``R``.

    Does not depend on how ``S`` and ``R`` are coupled.
    """
    return (r.b / s.b) * math.exp(digamma(s.a) - digamma(r.a))


def var_log_gamma_ratio(s: GammaParams, r: GammaParams, rho=0.0) -> float:
    """Variance of ``log(S / R)`` when ``log S`` and ``log R`` have correlation ``rho``."""
    rho = _as_rho(rho)
    ts, tr = trigamma(s.a), trigamma(r.a)
    return max(ts + tr - 2.0 * rho * math.sqrt(ts * tr), 0.0)


def loggamma_pdf(y, params: GammaParams):
    """Density of ``log Z`` for ``Z ~ Gamma(a, b)``."""
    a, b = params.a, params.b
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore"):
        log_f = a * math.log(b) - ln_gamma(a) + a * y - b * np.exp(y)
    out = np.exp(log_f)
    return float(out) if out.ndim == 0 else out

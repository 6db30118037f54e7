"""Special functions used by the distributions and the hypothesis tests.

Everything here works on plain floats. A few private helpers accept numpy
arrays so that the Monte Carlo engine can evaluate p-values for a whole
batch of replications at once; they share the scalar code paths' formulas.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286061
_LN_SQRT_2PI = 0.91893853320467274178

# Lanczos approximation, g = 7, 9 terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# zeta(k) - 1 for k = 2..40, used by the series of log Gamma(1 + z).
_ZETA_M1 = (
    0.64493406684822644,
    0.20205690315959429,
    0.082323233711138192,
    0.036927755143369926,
    0.01734306198444914,
    0.0083492773819228268,
    0.0040773561979443394,
    0.0020083928260822144,
    0.00099457512781808534,
    0.00049418860411946456,
    0.0002460865533080483,
    0.00012271334757848915,
    6.1248135058704829e-5,
    3.0588236307020494e-5,
    1.5282259408651872e-5,
    7.6371976378997623e-6,
    3.8172932649998399e-6,
    1.9082127165539389e-6,
    9.5396203387279611e-7,
    4.7693298678780646e-7,
    2.3845050272773299e-7,
    1.1921992596531107e-7,
    5.960818905125948e-8,
    2.980350351465228e-8,
    1.4901554828365041e-8,
    7.4507117898354295e-9,
    3.7253340247884571e-9,
    1.862659723513049e-9,
    9.3132743241966818e-10,
    4.6566290650337841e-10,
    2.3283118336765055e-10,
    1.164155017270052e-10,
    5.8207720879027009e-11,
    2.9103850444970997e-11,
    1.4551921891041984e-11,
    7.275959835057481e-12,
    3.6379795473786512e-12,
    1.8189896503070659e-12,
    9.0949478402638893e-13,
)

# Asymptotic shift point for the polygamma series; the first omitted
# Bernoulli term is below 1e-16 here.
_ASYMPTOTIC_MIN = 10.0


def _check_real(x, name: str) -> float:
    x = float(x)
    if math.isnan(x):
        raise DomainError(f"{name} is NaN")
    return x


def _check_positive(x, name: str) -> float:
    x = _check_real(x, name)
    if not x > 0.0:
        raise DomainError(f"{name} must be > 0, got {x!r}")
    return x


def _lngamma1p_small(z: float) -> float:
    # log Gamma(1 + z) for |z| <= 0.5, accurate in relative terms near z = 0.
    total = 0.0
    zk = -z
    for k, zm1 in enumerate(_ZETA_M1, start=2):
        zk *= -z
        total += zm1 * zk / k
    return total - math.log1p(z) + z * (1.0 - EULER_GAMMA)


def _lanczos_lngamma(a: float) -> float:
    t = a + _LANCZOS_G - 0.5
    return _LN_SQRT_2PI + (a - 0.5) * math.log(t) - t + math.log(_lanczos_sum(a))


def ln_gamma(a: float) -> float:
    """Natural logarithm of the gamma function for ``a > 0``.

    Near the zeros of log Gamma at 1 and 2 a power series is used so the
    result keeps full relative precision; elsewhere a Lanczos sum.
    """
    a = _check_positive(a, "a")
    if math.isinf(a):
        return math.inf
    if a < 0.5:
        # Gamma(a) = Gamma(a + 1) / a
        return _lngamma1p_small(a) - math.log(a)
    if a < 1.5:
        return _lngamma1p_small(a - 1.0)
    if a < 2.5:
        z = a - 2.0
        return _lngamma1p_small(z) + math.log1p(z)
    return _lanczos_lngamma(a)


def _lanczos_sum(a: float) -> float:
    x = a - 1.0
    s = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        s += _LANCZOS[i] / (x + i)
    return s


def ln_beta(a: float, b: float) -> float:
    """log B(a, b)."""
    small, big = min(a, b), max(a, b)
    if big < 10.0:
        return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    # log Gamma(big) - log Gamma(big + small) without cancelling the large
    # (x + 1/2) log t - t terms of the two Lanczos expansions.
    t = big + _LANCZOS_G - 0.5
    diff = (
        -(big - 0.5) * math.log1p(small / t)
        - small * math.log(t + small)
        + small
        + math.log(_lanczos_sum(big) / _lanczos_sum(big + small))
    )
    return ln_gamma(small) + diff


def digamma(a: float) -> float:
    """The digamma function psi(a) = d/da log Gamma(a), for ``a > 0``."""
    x = _check_positive(a, "a")
    if math.isinf(x):
        return math.inf
    shift = 0.0
    while x < _ASYMPTOTIC_MIN:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = inv2 * (
        1.0 / 12
        - inv2
        * (
            1.0 / 120
            - inv2
            * (
                1.0 / 252
                - inv2
                * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12)))
            )
        )
    )
    return math.log(x) - 0.5 / x - tail - shift


def trigamma(a: float) -> float:
    """The trigamma function psi_1(a) = d/da psi(a), for ``a > 0``."""
    x = _check_positive(a, "a")
    if math.isinf(x):
        return 0.0
    shift = 0.0
    while x < _ASYMPTOTIC_MIN:
        shift += 1.0 / (x * x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = inv2 * (
        1.0 / 6
        - inv2
        * (
            1.0 / 30
            - inv2
            * (
                1.0 / 42
                - inv2
                * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6)))
            )
        )
    )
    return (1.0 + 0.5 / x + tail) / x + shift


def inverse_digamma(y: float, tol: float = 1e-14, max_iter: int = 100) -> float:
    """Solve ``digamma(a) = y`` for ``a > 0`` by Newton's method.

    The starting point is ``exp(y) + 1/2`` for ``y >= -2.22`` and
    ``-1/(y + EULER_GAMMA)`` below that, which puts Newton in its
    quadratic regime from the first step on the whole real line.
    """
    y = _check_real(y, "y")
    if math.isinf(y):
        raise DomainError("y must be finite")
    if y >= -2.22:
        a = math.exp(y) + 0.5
    else:
        a = -1.0 / (y + EULER_GAMMA)
    if math.isinf(a):
        raise DomainError(f"digamma(a) = {y!r} has no representable solution")

    for _ in range(max_iter):
        step = (digamma(a) - y) / trigamma(a)
        new = a - step
        if new <= 0.0:
            new = a / 2.0
        if abs(new - a) <= tol * new:
            return new
        a = new
    raise ConvergenceError(f"inverse_digamma({y!r}) did not converge in {max_iter} steps")


_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 20000


def _betacf(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """Continued fraction for I_x(a, b), modified Lentz, elementwise."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _CF_EPS
        if not active.any():
            return h
    raise ConvergenceError("incomplete beta continued fraction did not converge")


def _reg_inc_beta_array(x, a: float, b: float, y=None) -> np.ndarray:
    """I_x(a, b) for an array of ``x``; ``y`` optionally supplies 1 - x exactly."""
    x = np.asarray(x, dtype=float)
    y = 1.0 - x if y is None else np.asarray(y, dtype=float)
    out = np.empty(x.shape, dtype=float)
    zero = x <= 0.0
    one = y <= 0.0
    out[zero] = 0.0
    out[one] = 1.0
    inner = ~(zero | one)
    if not inner.any():
        return out
    xi = x[inner]
    yi = y[inner]
    lbeta = ln_beta(a, b)
    swap = xi > (a + 1.0) / (a + b + 2.0)
    res = np.empty(xi.shape, dtype=float)
    if (~swap).any():
        xs, ys = xi[~swap], yi[~swap]
        front = np.exp(a * np.log(xs) + b * np.log(ys) - lbeta)
        res[~swap] = front * _betacf(xs, a, b) / a
    if swap.any():
        xs, ys = xi[swap], yi[swap]
        front = np.exp(b * np.log(ys) + a * np.log(xs) - lbeta)
        res[swap] = 1.0 - front * _betacf(ys, b, a) / b
    out[inner] = np.clip(res, 0.0, 1.0)
    return out


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    x = _check_real(x, "x")
    a = _check_positive(a, "a")
    b = _check_positive(b, "b")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if math.isinf(a) or math.isinf(b):
        raise DomainError("a and b must be finite")
    return float(_reg_inc_beta_array(np.array([x]), a, b)[0])


def _t_two_sided_array(t, nu: float) -> np.ndarray:
    """P(|T| >= |t|) for Student's t with ``nu`` degrees of freedom."""
    t2 = np.square(np.asarray(t, dtype=float))
    denom = nu + t2
    return _reg_inc_beta_array(nu / denom, nu / 2.0, 0.5, y=t2 / denom)


def student_t_cdf(t: float, nu: float) -> float:
    """CDF of Student's t distribution with ``nu`` degrees of freedom."""
    t = _check_real(t, "t")
    nu = _check_positive(nu, "nu")
    if math.isinf(nu):
        return normal_cdf(t)
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * float(_t_two_sided_array(np.array([t]), nu)[0])
    return 1.0 - tail if t > 0 else tail


def normal_cdf(z: float) -> float:
    """Standard normal CDF."""
    z = _check_real(z, "z")
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


_erfc_array = np.frompyfunc(math.erfc, 1, 1)


def _normal_sf_array(z) -> np.ndarray:
    """Upper-tail standard normal probability for an array."""
    z = np.asarray(z, dtype=float)
    return 0.5 * _erfc_array(z / math.sqrt(2.0)).astype(float)


# Acklam's rational approximation to the lower half of the normal quantile.
_QA = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
       1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_QB = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
       6.680131188771972e01, -1.328068155288572e01)
_QC = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
       -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_QD = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
       3.754408661907416e00)
_P_LOW = 0.02425


def _lower_quantile(p: float) -> float:
    # p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]) / (
            (((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]) * q / (
            ((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0
        )
    # one Halley step on the CDF
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF for ``0 < p < 1``."""
    p = _check_real(p, "p")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact for p in [0.5, 1]
        return -_lower_quantile(1.0 - p)
    return _lower_quantile(p)

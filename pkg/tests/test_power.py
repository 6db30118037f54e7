import math

import numpy as np
import pytest

from gmaccuracy.distributions import RngStream
from gmaccuracy.errors import DomainError
from gmaccuracy.power import (
    CHUNK_REPS,
    TABLE1_CASES,
    GammaFixedRate,
    GammaFixedShape,
    LogNormalRatio,
    PowerScenario,
    _draw_pairs,
    calibrate_scenario,
    default_beta_grid,
    gm_ratio_check,
    run_power_curve,
    run_power_point,
    run_table1,
)
from gmaccuracy.specfn import digamma

FAMILIES = [LogNormalRatio(), LogNormalRatio(2.0, -0.5), GammaFixedShape(3, 5), GammaFixedRate(3, 10)]


# -- calibration ------------------------------------------------------------------


def test_calibrate_fixed_shape_example():
    p = calibrate_scenario(GammaFixedShape(a=3, b_S=5), 0.4)
    assert p.r.b == pytest.approx(7.0, rel=1e-15)
    assert p.s.a == p.r.a == 3
    assert gm_ratio_check(p) == pytest.approx(1.4, rel=1e-14)


def test_calibrate_fixed_rate_example():
    p = calibrate_scenario(GammaFixedRate(b=3, a_R=1), 0.5)
    assert gm_ratio_check(p) == pytest.approx(1.5, abs=1e-9)
    assert digamma(p.s.a) - digamma(p.r.a) == pytest.approx(math.log(1.5), abs=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_calibrate_zero_bias_gives_unit_gm(family):
    assert gm_ratio_check(calibrate_scenario(family, 0.0)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("beta", [-0.7, -0.2, 0.15, 0.7])
def test_calibrate_gm_matches_beta(family, beta):
    assert gm_ratio_check(calibrate_scenario(family, beta)) == pytest.approx(1 + beta, abs=1e-9)


@pytest.mark.parametrize("family", FAMILIES)
def test_calibration_on_pilot_draws(family):
    beta = 0.3
    params = calibrate_scenario(family, beta)
    s, r = _draw_pairs(params, RngStream(77, 0), (1, 100_000))
    y = np.log(s / r).ravel()
    se = y.std() / math.sqrt(y.size)
    assert abs(y.mean() - math.log1p(beta)) < 4 * se


def test_calibrate_rejects_beta():
    with pytest.raises(DomainError):
        calibrate_scenario(LogNormalRatio(), -1.0)


def test_default_grid():
    g = default_beta_grid(LogNormalRatio())
    assert len(g) == 21 and g[0] == -0.2 and g[-1] == 0.2 and g[10] == 0.0
    g = default_beta_grid(GammaFixedShape())
    assert g[0] == -0.7 and g[-1] == 0.7


# -- scenarios and points --------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=2),
        dict(reps=0),
        dict(reps=1.5),
        dict(alpha=0.0),
        dict(alpha=1.0),
        dict(seed=-1),
        dict(normality_gate="sometimes"),
        dict(beta_grid=()),
        dict(beta_grid=(-1.0,)),
        dict(beta_grid=(float("nan"),)),
    ],
)
def test_scenario_validation(kwargs):
    base = dict(family=LogNormalRatio(), beta_grid=(0.0,), n=20)
    base.update(kwargs)
    with pytest.raises(DomainError):
        PowerScenario(**base)


@pytest.mark.parametrize("kwargs", [dict(theta_R=0.0), dict(rho=1.2)])
def test_family_validation(kwargs):
    with pytest.raises(DomainError):
        LogNormalRatio(**kwargs)


def test_single_replication_rates_are_binary():
    sc = PowerScenario(LogNormalRatio(), (0.0, 0.5), n=20, reps=1, seed=3)
    for point in run_power_curve(sc):
        for rate in (point.reject_rate_accuracy, point.reject_rate_binomial, point.normality_gate_rate):
            assert rate in (0.0, 1.0)
        assert point.reps == 1


def test_point_fields_consistent():
    sc = PowerScenario(GammaFixedRate(3, 1), (0.3,), n=20, reps=3000, seed=4)
    p = run_power_point(sc, 0.3)
    assert p.mc_std_err_accuracy == pytest.approx(math.sqrt(p.reject_rate_accuracy * (1 - p.reject_rate_accuracy) / 3000))
    assert p.mc_std_err_binomial == pytest.approx(math.sqrt(p.reject_rate_binomial * (1 - p.reject_rate_binomial) / 3000))
    assert p.reject_rate_accuracy <= p.reject_rate_ttest


def test_gate_policies_relation():
    kw = dict(family=GammaFixedRate(3, 1), beta_grid=(0.2,), n=20, reps=2500, seed=5)
    pts = {g: run_power_curve(PowerScenario(normality_gate=g, **kw))[0] for g in ("non_rejection", "rejection", "ungated")}
    # all three share the same draws
    assert len({p.reject_rate_binomial for p in pts.values()}) == 1
    assert pts["ungated"].reject_rate_accuracy == pts["ungated"].reject_rate_ttest
    assert pts["non_rejection"].reject_rate_accuracy <= pts["ungated"].reject_rate_accuracy
    gate = pts["rejection"].normality_gate_rate
    assert pts["rejection"].reject_rate_accuracy >= gate
    assert pts["rejection"].reject_rate_accuracy == pytest.approx(pts["non_rejection"].reject_rate_accuracy + gate, abs=1e-12)


def test_determinism_and_worker_invariance():
    sc = PowerScenario(LogNormalRatio(), (-0.1, 0.0, 0.1, 0.2), n=20, reps=CHUNK_REPS + 300, seed=11)
    a = run_power_curve(sc)
    assert run_power_curve(sc) == a
    assert run_power_curve(sc, workers=2) == a
    # a point depends only on its grid index, not on the rest of the grid
    assert run_power_point(sc, 0.1, stream_id=2) == a[2]


def test_different_seeds_differ():
    kw = dict(family=LogNormalRatio(), beta_grid=(0.1,), n=20, reps=2000)
    a = run_power_curve(PowerScenario(seed=1, **kw))[0]
    b = run_power_curve(PowerScenario(seed=2, **kw))[0]
    assert a != b


def test_power_curve_shape():
    grid = default_beta_grid(LogNormalRatio(), 9)
    sc = PowerScenario(LogNormalRatio(), grid, n=100, reps=2000, seed=21)
    pts = run_power_curve(sc)
    rates = [p.reject_rate_accuracy for p in pts]
    centre = rates[len(rates) // 2]
    assert centre < 0.08
    # rises away from zero on both sides
    assert rates[0] > 0.2 and rates[-1] > 0.2
    assert rates[0] > rates[2] > centre and rates[-1] > rates[-3] > centre


# -- Table 1 ---------------------------------------------------------------------------


def test_table1_layout_and_determinism():
    rows = run_table1(reps=300, seed=7)
    assert [(r.case, r.a, r.b, r.n) for r in rows] == list(TABLE1_CASES)
    assert all(0.0 <= r.reject_pct <= 100.0 and r.reps == 300 for r in rows)
    assert run_table1(reps=300, seed=7, workers=3) == rows


def test_table1_rate_free_of_rate_parameter():
    # rows 4-6 differ only in b, which cancels in S/R
    rows = run_table1(reps=5000, seed=8)
    r4, r5, r6 = rows[3], rows[4], rows[5]
    for x, y in [(r4, r5), (r4, r6), (r5, r6)]:
        combined = math.hypot(x.mc_std_err_pct, y.mc_std_err_pct)
        assert abs(x.reject_pct - y.reject_pct) < 3 * combined


def test_table1_reps_validation():
    with pytest.raises(DomainError):
        run_table1(reps=0)


def test_fixed_shape_same_seed_invariance():
    # b_S cancels in S/R, so with a shared seed only rounding can differ
    curves = []
    for b_s in (1.0, 5.0, 10.0):
        fam = GammaFixedShape(3.0, b_s)
        sc = PowerScenario(fam, default_beta_grid(fam, 7), n=20, reps=1000, seed=31, normality_gate="ungated")
        curves.append([(p.reject_rate_accuracy, p.reject_rate_binomial) for p in run_power_curve(sc)])
    for other in curves[1:]:
        np.testing.assert_allclose(other, curves[0], atol=2e-3)


def test_fixed_rate_power_increases_with_shape():
    # larger a_R shrinks var log(S/R), so a fixed bias is easier to detect
    rates = []
    for a_r in (1.0, 5.0, 10.0):
        sc = PowerScenario(GammaFixedRate(3.0, a_r), (0.3,), n=20, reps=2000, seed=41, normality_gate="ungated")
        rates.append(run_power_curve(sc)[0].reject_rate_accuracy)
    assert rates[0] < rates[1] < rates[2]

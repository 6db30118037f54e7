"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line, shown in the pytest terminal
summary under "acceptance criteria" (and inline with ``-s``). Tolerances are
fixed here and not tuned to the results.

    pytest tests/test_acceptance.py -s
"""

import itertools
import math
from pathlib import Path

import numpy as np

from gmaccuracy.cli import main
from gmaccuracy.power import (
    GammaFixedRate,
    GammaFixedShape,
    LogNormalRatio,
    PowerScenario,
    default_beta_grid,
    run_power_curve,
    run_table1,
)
from gmaccuracy.specfn import digamma, inverse_digamma, ln_gamma, normal_quantile, reg_inc_beta, trigamma
from gmaccuracy.stattests import binomial_sign_test, binomial_two_sided_p, shapiro_wilk, t_test_mu0

ROOT = Path(__file__).resolve().parent.parent
SEED = 20160101
POWER_REPS = 10_000

TABLE1_REFERENCE = (6.94, 7.07, 6.89, 10.98, 10.98, 10.99, 11.65, 6.17, 5.49, 30.33, 8.00, 6.26)


def _z_gap(point):
    """(accuracy - binomial) / combined MC standard error."""
    se = math.hypot(point.mc_std_err_accuracy, point.mc_std_err_binomial)
    diff = point.reject_rate_accuracy - point.reject_rate_binomial
    if se == 0.0:
        return math.copysign(math.inf, diff) if diff else 0.0
    return diff / se


# 1 ------------------------------------------------------------------------------


def test_criterion_01_binomial_oracle(criterion):
    r = binomial_sign_test([2.0] * 14 + [0.5] * 6)
    above_half = [b for b in range(11, 21) if abs(binomial_two_sided_p(20, b) - 0.1153183) <= 1e-7]
    ok = abs(r.p_value - 0.1153183) <= 1e-7 and above_half == [14]
    criterion(1, ok, f"p(n=20, b=14) = {r.p_value:.10f}; b > n/2 matching 0.1153183: {above_half}")


# 2 ------------------------------------------------------------------------------


def _table1_check(reps, tol):
    rows = run_table1(reps=reps, seed=SEED)
    devs = [row.reject_pct - ref for row, ref in zip(rows, TABLE1_REFERENCE)]
    for row, ref, dev in zip(rows, TABLE1_REFERENCE, devs):
        print(f"  table1 reps={reps} case {row.case:>2}: {row.reject_pct:6.2f}% vs {ref:5.2f}% ({dev:+.2f}pp)")
    worst = max(abs(d) for d in devs)
    return worst <= tol, worst


def test_criterion_02_table1(criterion):
    ok20, worst20 = _table1_check(20_000, 1.0)
    ok100, worst100 = _table1_check(100_000, 0.6)
    criterion(
        2,
        ok20 and ok100,
        f"max |dev| {worst20:.2f}pp at 20k reps (tol 1.0), {worst100:.2f}pp at 100k reps (tol 0.6)",
    )


# 3 ------------------------------------------------------------------------------


def test_criterion_03_level(criterion):
    parts, ok = [], True
    for n in (20, 100):
        sc = PowerScenario(LogNormalRatio(1.0, 0.0), (0.0,), n=n, reps=POWER_REPS, seed=SEED)
        p = run_power_curve(sc)[0]
        ok &= 0.04 <= p.reject_rate_accuracy <= 0.06 and p.reject_rate_binomial <= 0.06
        parts.append(f"n={n}: accuracy {p.reject_rate_accuracy:.4f}, binomial {p.reject_rate_binomial:.4f}")
    criterion(3, ok, "; ".join(parts))


# 4 ------------------------------------------------------------------------------


def test_criterion_04_power_dominance(criterion):
    checks = []

    sc = PowerScenario(LogNormalRatio(1.0, 0.0), (-0.2, 0.2), n=100, reps=POWER_REPS, seed=SEED)
    for p in run_power_curve(sc):
        checks.append((f"LogNormal n=100 beta={p.beta:+.1f}", p))

    # Gamma cases: n = 20, t-test applied without the normality gate (see README)
    gamma_families = [GammaFixedShape(3.0, b) for b in (1.0, 5.0, 10.0)] + [GammaFixedRate(3.0, a) for a in (1.0, 5.0, 10.0)]
    for fam in gamma_families:
        sc = PowerScenario(fam, (-0.5, 0.5), n=20, reps=POWER_REPS, seed=SEED, normality_gate="ungated")
        for p in run_power_curve(sc):
            checks.append((f"{fam} n=20 beta={p.beta:+.1f}", p))

    for label, p in checks:
        print(f"  {label}: accuracy {p.reject_rate_accuracy:.4f} binomial {p.reject_rate_binomial:.4f} z={_z_gap(p):.1f}")

    # informational only: the gated procedure and n = 100 for the Gamma cases
    for fam, n, gate in itertools.product(gamma_families, (20, 100), ("non_rejection", "ungated")):
        if n == 20 and gate == "ungated":
            continue
        sc = PowerScenario(fam, (-0.5, 0.5), n=n, reps=POWER_REPS, seed=SEED, normality_gate=gate)
        for p in run_power_curve(sc):
            print(f"  [info] {fam} n={n} {gate} beta={p.beta:+.1f}: z={_z_gap(p):.1f}")

    worst_label, worst = min(((label, _z_gap(p)) for label, p in checks), key=lambda t: t[1])
    criterion(4, worst > 2.0, f"{len(checks)} comparisons, smallest gap {worst:.1f} s.e. ({worst_label})")


# 5 ------------------------------------------------------------------------------


def test_criterion_05_fixed_shape_invariance(criterion):
    # each b_S gets its own seed so the comparison is between independent runs
    worst = 0.0
    for n in (20, 100):
        curves = []
        for k, b_s in enumerate((1.0, 5.0, 10.0)):
            fam = GammaFixedShape(3.0, b_s)
            sc = PowerScenario(fam, default_beta_grid(fam), n=n, reps=POWER_REPS, seed=SEED + k, normality_gate="ungated")
            curves.append(run_power_curve(sc))
        for x, y in itertools.combinations(curves, 2):
            for p, q in zip(x, y):
                for rate, err in (
                    ("reject_rate_accuracy", "mc_std_err_accuracy"),
                    ("reject_rate_binomial", "mc_std_err_binomial"),
                ):
                    d = abs(getattr(p, rate) - getattr(q, rate))
                    se = math.hypot(getattr(p, err), getattr(q, err))
                    z = d / se if se else (0.0 if d == 0 else math.inf)
                    worst = max(worst, z)
    criterion(5, worst < 3.0, f"b_S in {{1, 5, 10}}, n in {{20, 100}}, 21 betas: max pairwise gap {worst:.2f} s.e. (tol 3)")


# 6 ------------------------------------------------------------------------------


def _within(got, expected, tol):
    # absolute tolerance, floored at 4 ulp of the value where float64 cannot resolve ``tol``
    return abs(got - expected) <= max(tol, 4 * math.ulp(expected))


def test_criterion_06_specfn_tables(criterion, oracles):
    t = oracles["specfn"]
    sizes = {k: len(v) for k, v in t.items()}
    fails = {
        "ln_gamma": sum(abs(ln_gamma(a) - v) > 1e-13 * abs(v) for a, v in t["ln_gamma"]),
        "digamma": sum(not _within(digamma(a), v, 1e-12) for a, v in t["digamma"]),
        "trigamma": sum(not _within(trigamma(a), v, 1e-10) for a, v in t["trigamma"]),
        "reg_inc_beta": sum(abs(reg_inc_beta(x, a, b) - v) > 1e-12 * v for x, a, b, v in t["reg_inc_beta"]),
        "normal_quantile": sum(abs(normal_quantile(p) - v) > 1e-9 for p, v in t["normal_quantile"]),
    }
    # points that meet only the ulp floor, not the raw absolute tolerance
    floored = sum(abs(digamma(a) - v) > 1e-12 for a, v in t["digamma"]) + sum(abs(trigamma(a) - v) > 1e-10 for a, v in t["trigamma"])
    roundtrip = max(abs(digamma(inverse_digamma(y)) - y) for y in np.linspace(-50, 50, 1001))
    ok = all(n >= 200 for n in sizes.values()) and not any(fails.values()) and roundtrip < 1e-11
    criterion(
        6,
        ok,
        f"points {sizes}; failures {fails}; inverse_digamma roundtrip {roundtrip:.1e}; "
        f"{floored} digamma/trigamma points near a = 0 pass only at 4 ulp (absolute tolerance below float64 spacing there)",
    )


# 7 ------------------------------------------------------------------------------


def test_criterion_07_t_test(criterion, oracles):
    r = t_test_mu0([0.1, 0.2, 0.3])
    t = r.statistic
    closed = 2.0 * (1.0 - (0.5 + t / (2.0 * math.sqrt(2.0 + t * t))))
    closed_err = abs(r.p_value - closed)
    ref_err = max(abs(t_test_mu0(c["x"]).p_value - c["p"]) for c in oracles["ttest"])
    n_ref = len(oracles["ttest"])
    ok = closed_err <= 1e-6 and ref_err <= 1e-9 and n_ref == 50
    criterion(7, ok, f"nu=2 closed form |dp| {closed_err:.1e} (tol 1e-6); {n_ref} reference samples max |dp| {ref_err:.1e} (tol 1e-9)")


# 8 ------------------------------------------------------------------------------


def test_criterion_08_shapiro_wilk(criterion, oracles):
    cases = oracles["shapiro"]
    dw = dp = 0.0
    for c in cases:
        r = shapiro_wilk(c["x"])
        dw = max(dw, abs(r.statistic - c["w"]))
        dp = max(dp, abs(r.p_value - c["p"]))
    sizes = sorted({len(c["x"]) for c in cases})
    ok = len(cases) == 50 and sizes == [3, 10, 20, 100, 500] and dw <= 1e-6 and dp <= 1e-4
    criterion(8, ok, f"{len(cases)} samples, n in {sizes}: max |dW| {dw:.1e} (tol 1e-6), max |dp| {dp:.1e} (tol 1e-4)")


# 9 ------------------------------------------------------------------------------


def test_criterion_09_raw_data_substitution(criterion, oracles):
    # the raw ratios are unpublished; the substitutes are criteria 1, 7 and 8
    # plus a fixture note explaining the situation
    note = (ROOT / "data" / "README.md").read_text()
    documented = "never released" in note and "0.04092635" in note
    substitutes = (
        abs(binomial_two_sided_p(20, 14) - 0.1153183) <= 1e-7
        and max(abs(t_test_mu0(c["x"]).p_value - c["p"]) for c in oracles["ttest"]) <= 1e-9
        and max(abs(shapiro_wilk(c["x"]).p_value - c["p"]) for c in oracles["shapiro"]) <= 1e-4
    )
    criterion(
        9,
        documented and substitutes,
        "raw-data example not reproducible (data unpublished); fixture note present, oracle substitutes hold",
    )


# 10 -----------------------------------------------------------------------------


def test_criterion_10_determinism(criterion, tmp_path):
    config = str(ROOT / "configs" / "fig2_rho0_n20.json")
    outputs = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"power{i}.csv"
        assert main(["power", "--config", config, "--workers", str(workers), "--output", str(out)]) == 0
        outputs.append(out.read_bytes())
    tables = []
    for i, workers in enumerate((1, 3)):
        out = tmp_path / f"table{i}.csv"
        assert main(["table1", "--reps", "2000", "--seed", str(SEED), "--workers", str(workers), "--output", str(out)]) == 0
        tables.append(out.read_bytes())
    ok = len(set(outputs)) == 1 and len(set(tables)) == 1
    criterion(10, ok, "power (workers 1, 1, 2) and table1 (workers 1, 3) outputs byte-identical")

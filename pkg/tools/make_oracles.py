"""Regenerate the frozen oracle tables under tests/data/.

Special-function values come from mpmath at 50 digits; Shapiro-Wilk and
t-test values come from scipy (Fortran AS R94 ``swilk`` and
``ttest_1samp``). Only needed when the tables must be rebuilt; the test
suite reads the JSON files and never calls this script.

    python tools/make_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np
import scipy.stats as st

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"
mp.mp.dps = 50


def f(x) -> float:
    return float(mp.mpf(x))


def specfn_tables(rng):
    tables = {}

    a = np.concatenate(
        [
            10.0 ** rng.uniform(-10, 10, 160),
            rng.uniform(0.5, 2.5, 60),
            [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 10.0, 100.0],
        ]
    )
    tables["ln_gamma"] = [[x, f(mp.loggamma(x))] for x in map(float, a)]

    a = np.concatenate([10.0 ** rng.uniform(-6, 8, 200), rng.uniform(1.0, 2.0, 40)])
    tables["digamma"] = [[x, f(mp.digamma(x))] for x in map(float, a)]
    tables["trigamma"] = [[x, f(mp.psi(1, x))] for x in map(float, a)]

    rows = []
    while len(rows) < 240:
        x = float(rng.uniform(0.001, 0.999))
        aa = float(10.0 ** rng.uniform(-1, np.log10(300)))
        bb = float(10.0 ** rng.uniform(-1, np.log10(300)))
        v = f(mp.betainc(aa, bb, 0, x, regularized=True))
        if v > 1e-280:
            rows.append([x, aa, bb, v])
    tables["reg_inc_beta"] = rows

    p = np.concatenate([10.0 ** rng.uniform(-10, np.log10(0.5), 120), rng.uniform(0.5, 1 - 1e-10, 120)])
    tables["normal_quantile"] = [[x, f(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(x) - 1))] for x in map(float, p)]
    return tables


def shapiro_cases(rng):
    cases = []
    draws = [
        ("normal", lambda n: rng.standard_normal(n)),
        ("lognormal", lambda n: rng.lognormal(0.0, 0.7, n)),
        ("exponential", lambda n: rng.exponential(1.0, n)),
        ("uniform", lambda n: rng.uniform(-1.0, 1.0, n)),
        ("t3", lambda n: rng.standard_t(3, n)),
    ]
    for n in (3, 10, 20, 100, 500):
        for k in range(10):
            name, draw = draws[k % len(draws)]
            x = draw(n)
            res = st.shapiro(x)
            cases.append({"dist": name, "x": x.tolist(), "w": float(res.statistic), "p": float(res.pvalue)})
    return cases


def ttest_cases(rng):
    cases = []
    for _ in range(50):
        n = int(rng.integers(2, 120))
        x = rng.normal(rng.uniform(-0.5, 0.5), rng.uniform(0.1, 3.0), n)
        res = st.ttest_1samp(x, 0.0)
        cases.append({"x": x.tolist(), "t": float(res.statistic), "p": float(res.pvalue)})
    return cases


def golden_normal_sample():
    # the same 20 draws the tests produce with RngStream(42, 0)
    from gmaccuracy.distributions import RngStream, sample_std_normal

    x = sample_std_normal(RngStream(42, 0), 20)
    res = st.shapiro(x)
    return {"seed": 42, "stream_id": 0, "x": x.tolist(), "w": float(res.statistic), "p": float(res.pvalue)}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(19650101)
    payload = {
        "specfn": specfn_tables(rng),
        "shapiro": shapiro_cases(rng),
        "ttest": ttest_cases(rng),
        "shapiro_golden": golden_normal_sample(),
        "generator": f"mpmath {mp.__version__}, scipy {__import__('scipy').__version__}",
    }
    with open(OUT / "oracles.json", "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()

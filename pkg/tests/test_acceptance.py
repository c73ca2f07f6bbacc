"""Acceptance checks, one PASS/FAIL line each (printed in the terminal summary).

The simulation-study checks share one session-scoped run of the full
profile (100 replications, 10000/3000/50 chains) and one smoke run
(10 replications, thinning 10).
"""

import math
import time

import numpy as np
import pytest

import bayesvar.harness as harness
from bayesvar.cli import main
from bayesvar.distributions import BaselineModel, GpdParams, log_likelihood, quantile, sample
from bayesvar.estimators import extract_exceedances
from bayesvar.harness import StudyGrid, default_params, log_returns, run_study, synthetic_prices, write_prices
from bayesvar.mcmc import (
    ChainConfig, bmh_baseline, ipbmh_tail_chain, ratio_exponential_sigma, ratio_gamma_joint,
    ratio_stable_sigma, ratio_stable_xi,
)
from bayesvar.priors import stable_priors
from bayesvar.risk import cvar_numeric_oracle, exact_risk, risk_exponential, risk_normal, threshold_transfer

LEVELS = (0.91, 0.95, 0.99)
STUDY_FAMILIES = {
    "exponential": ((0.5,), (1.0,), (2.0,)),
    "normal": ((0.0, 0.5), (0.0, 1.0), (0.0, 2.0)),
    "cauchy": ((0.0, 0.5), (0.0, 1.0), (0.0, 2.0)),
    "gamma": tuple((a, b) for a in (0.5, 2.0) for b in (0.25, 1.0, 4.0)),
}
STUDY_SIZES = (32, 1024)
TOLERANCE = {32: 0.15, 1024: 0.10}


def test_c1_closed_form_cvar_matches_quadrature(report):
    models = [BaselineModel.exponential(*p) for p in default_params("exp")]
    models += [BaselineModel.gamma(*p) for p in default_params("gamma")]
    models += [BaselineModel.normal(*p) for p in default_params("normal")]
    start = time.perf_counter()
    worst = max(abs(exact_risk(m, p).cvar / cvar_numeric_oracle(m, p) - 1) for m in models for p in LEVELS)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-7 and elapsed < 1.0
    report("criterion 1 closed-form vs quadrature CVaR",
           ok, f"{len(models) * 3} cases, max rel err {worst:.2e} (<= 1e-7), {elapsed:.2f}s (< 1s)")
    assert ok


def test_c2_exponential_threshold_transfer_is_exact(report):
    start = time.perf_counter()
    worst, cases = 0.0, 0
    for lam in (0.25, 0.5, 1.0, 2.0, 4.0):
        model = BaselineModel.exponential(lam)
        for p_u in (0.8, 0.9, 0.95):
            u = float(quantile(model, p_u))
            for p in LEVELS:
                if p <= p_u:
                    continue
                t = threshold_transfer(u, p, p_u, GpdParams(0.0, 1.0 / lam))
                e = risk_exponential(lam, p)
                worst = max(worst, abs(t.var / e.var - 1), abs(t.cvar / e.cvar - 1))
                cases += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    report("criterion 2 exponential threshold transfer", ok,
           f"{cases} cases, max rel err {worst:.1e} (<= 1e-12), {elapsed:.3f}s")
    assert ok


def _gpd_ll(xi, sigma, x):
    return log_likelihood(GpdParams(xi, sigma), x)


def test_c3_ratios_equal_likelihood_differences(report):
    rng = np.random.default_rng(20240)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        x = rng.gamma(1.5, 1.0, rng.integers(1, 12))
        s0, s1 = rng.uniform(0.2, 3.0, 2)
        x0, x1 = rng.uniform(-0.05, 0.8, 2)
        _, prior_sigma = stable_priors("normal", 0.9, rng.uniform(0.5, 3.0))
        prior_xi, _ = stable_priors("cauchy", 0.9, 1.0)
        norm_lp = lambda v, pr: -0.5 * ((v - pr.mean) / pr.sd) ** 2
        checks = [
            (ratio_exponential_sigma(s0, s1, x), _gpd_ll(0.0, s1, x) - _gpd_ll(0.0, s0, x)),
            (ratio_gamma_joint(GpdParams(x0, s0), GpdParams(x1, s1), x), _gpd_ll(x1, s1, x) - _gpd_ll(x0, s0, x)),
            (ratio_stable_xi(x0, x1, s0, x, prior_xi),
             _gpd_ll(x1, s0, x) - _gpd_ll(x0, s0, x) + norm_lp(x1, prior_xi) - norm_lp(x0, prior_xi)),
            (ratio_stable_sigma(s0, s1, x0, x, prior_sigma),
             _gpd_ll(x0, s1, x) - _gpd_ll(x0, s0, x) + norm_lp(s1, prior_sigma) - norm_lp(s0, prior_sigma)),
        ]
        for got, want in checks:
            if math.isinf(want):
                assert got == want
            else:
                worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 1.0
    report("criterion 3 ratio vs likelihood differences", ok,
           f"400 ratios, max abs diff {worst:.1e} (<= 1e-10), {elapsed:.2f}s")
    assert ok


def test_c4_posterior_recovery(report):
    cfg = ChainConfig(seed=11)
    start = time.perf_counter()

    x = sample(BaselineModel.exponential(1.0), 1024, 11, 1)
    lam = bmh_baseline("exp", x, cfg).mean()
    chain = ipbmh_tail_chain("exp", extract_exceedances(x, 0.9).values, lam, 0.9, cfg)
    z_exp = abs(chain["sigma"].mean() - 1.0) / chain["sigma"].std(ddof=1)

    z = sample(BaselineModel.normal(0.0, 1.0), 1024, 11, 2)
    base = bmh_baseline("normal", z, cfg).mean()
    chain = ipbmh_tail_chain("normal", extract_exceedances(z, 0.9).values, base, 0.9, cfg)
    z_xi = abs(chain["xi"].mean() + 0.151) / chain["xi"].std(ddof=1)
    z_sigma = abs(chain["sigma"].mean() - 0.534) / chain["sigma"].std(ddof=1)
    elapsed = time.perf_counter() - start

    ok = max(z_exp, z_xi, z_sigma) <= 3 and elapsed < 30
    report("criterion 4 posterior recovery", ok,
           f"|mean - target| / sd: Exp sigma {z_exp:.2f}, N(0,1) xi {z_xi:.2f}, sigma {z_sigma:.2f} (<= 3); "
           f"{elapsed:.1f}s")
    assert ok


def _study(reps, thin):
    cfg = ChainConfig(thin=thin, seed=0)
    start = time.perf_counter()
    cells = []
    for family, params in STUDY_FAMILIES.items():
        grid = StudyGrid(family, params, STUDY_SIZES, reps, methods=("mh", "ipbmh"), cfg=cfg)
        cells.extend(run_study(grid))
    return cells, time.perf_counter() - start


@pytest.fixture(scope="session")
def full_study():
    return _study(100, 50)


@pytest.fixture(scope="session")
def smoke_study():
    return _study(10, 10)


def _pairs(cells):
    """(ipbmh cell, mh cell) for every defined measure."""
    by_key = {(c.family, c.params, c.n, c.method.value, c.measure): c for c in cells}
    return [(c, by_key[(c.family, c.params, c.n, "mh", c.measure)])
            for c in cells if c.method.value == "ipbmh" and not c.undefined]


def _label(c):
    return f"{c.family.value}{c.params} n={c.n} {c.measure}"


def test_c5_ipbmh_accuracy_full_profile(report, full_study):
    cells, elapsed = full_study
    bad = [f"{_label(c)} {c.mean / c.true - 1:+.3f}" for c, _ in _pairs(cells)
           if abs(c.mean / c.true - 1) > TOLERANCE[c.n]]
    worst = max(abs(c.mean / c.true - 1) for c, _ in _pairs(cells))
    ok = not bad and elapsed <= 1800
    report("criterion 5(i) IPBMH mean within 10%/15% of truth [full]", ok,
           f"{len(_pairs(cells))} cells, worst rel err {worst:.3f}, {elapsed:.0f}s; off: {bad or 'none'}")
    assert ok


def _ordering(cells, width):
    pairs = _pairs(cells)
    bad = [f"{_label(ip)} {width(ip):.4g} > {width(mh):.4g}" for ip, mh in pairs if not width(ip) <= width(mh)]
    return pairs, bad


def test_c5_ordering_posterior_width_full_profile(report, full_study):
    cells, _ = full_study
    pairs, bad = _ordering(cells, lambda c: c.posterior_width)
    report("criterion 5(ii) IPBMH mean posterior interval width <= MH [full]", not bad,
           f"{len(pairs) - len(bad)}/{len(pairs)} cells ordered; violations: {bad or 'none'}")
    assert not bad


def test_c5_ordering_posterior_width_smoke_profile(report, smoke_study):
    cells, elapsed = smoke_study
    pairs, bad = _ordering(cells, lambda c: c.posterior_width)
    ok = not bad and elapsed <= 120
    report("criterion 5(ii) IPBMH mean posterior interval width <= MH [smoke 10 reps, thin 10]", ok,
           f"{len(pairs) - len(bad)}/{len(pairs)} cells ordered, {elapsed:.0f}s (<= 120s); violations: {bad or 'none'}")
    assert ok


def test_c5_ordering_cross_replication_spread_full_profile(report, full_study):
    # second reading of 5(ii): 2.5%-97.5% spread of the point estimates across replications
    cells, _ = full_study
    pairs, bad = _ordering(cells, lambda c: c.width)
    report("criterion 5(ii) alt. reading: IPBMH cross-replication spread <= MH [full]", not bad,
           f"{len(pairs) - len(bad)}/{len(pairs)} cells ordered; violations: {bad or 'none'}")
    assert not bad


def test_c5_ordering_cross_replication_spread_smoke_profile(report, smoke_study):
    cells, _ = smoke_study
    pairs, bad = _ordering(cells, lambda c: c.width)
    report("criterion 5(ii) alt. reading: IPBMH cross-replication spread <= MH [smoke]", not bad,
           f"{len(pairs) - len(bad)}/{len(pairs)} cells ordered; violations: {bad or 'none'}")
    assert not bad


def test_c6_cauchy_mh_deviates_more_than_ipbmh(report, full_study):
    cells, _ = full_study
    pick = {c.method.value: c for c in cells
            if c.family.value == "cauchy" and c.params == (0.0, 2.0) and c.n == 32 and c.measure == "var"}
    truth = 12.6275030
    assert pick["ipbmh"].true == pytest.approx(truth, abs=1e-7)
    err = {m: float(np.mean(np.abs(c.values / truth - 1))) for m, c in pick.items()}
    ok = err["mh"] > err["ipbmh"] and pick["mh"].values.size == pick["ipbmh"].values.size == 100
    report("criterion 6 Cauchy delta=2 n=32 mean abs rel VaR error, MH > IPBMH", ok,
           f"MH {err['mh']:.3g} vs IPBMH {err['ipbmh']:.3g} over 100 replications")
    assert ok


SMOKE = ChainConfig(thin=10)
BT_SD = 0.015


def _final_var(seed):
    dates, prices = synthetic_prices(257, BT_SD, seed)
    rows = harness.historical_backtest(log_returns(prices, dates), methods=("ipbmh",), cfg=SMOKE.with_(seed=seed))
    (row,) = [r for r in rows if r.method == "ipbmh" and r.measure == "var" and r.date == dates[-1]]
    return -row.estimate


def test_c7_backtest_final_day_var(report):
    start = time.perf_counter()
    truth = risk_normal(0.0, BT_SD, 0.95).var
    finals = np.array([_final_var(seed) for seed in range(20)])
    sd = finals.std(ddof=1)
    z = abs(finals[0] - truth) / sd
    within = int(np.sum(np.abs(finals - truth) <= 3 * sd))
    elapsed = time.perf_counter() - start
    ok = z <= 3 and elapsed < 600
    report("criterion 7 backtest final-day VaR vs closed form", ok,
           f"seed 0: {finals[0]:.5f} vs {truth:.5f}, {z:.2f} cross-seed sds (sd {sd:.5f}, 20 seeds, "
           f"{within}/20 within 3 sds), {elapsed:.0f}s")
    assert ok


def test_c7_backtest_causality_every_day(report, monkeypatch):
    dates, prices = synthetic_prices(257, BT_SD, 0)
    series = log_returns(prices, dates)
    seen = []
    real = harness.estimate_many

    def spy(method, samples, *args, **kwargs):
        seen.append([np.array(s, copy=True) for s in samples])
        return real(method, samples, *args, **kwargs)

    monkeypatch.setattr(harness, "estimate_many", spy)
    rows = harness.historical_backtest(series, methods=("mh", "ipbmh"), cfg=SMOKE)
    losses = -series.returns
    days = [d for d in dict.fromkeys(r.date for r in rows if r.method == "ipbmh")]
    violations = 0
    for windows in seen:
        assert len(windows) == len(days)
        for day, window in zip(days, windows):
            end = dates.index(day)
            # the row dated `day` sees exactly the returns dated up to `day`
            violations += not (window.size == end and np.array_equal(window, losses[:end]))
    sizes = [w.size for w in seen[0]]
    ok = violations == 0 and all(b - a == 1 for a, b in zip(sizes, sizes[1:])) and sizes[0] == 100
    report("criterion 7 backtest causality", ok,
           f"{len(days)} days x {len(seen)} methods checked, {violations} windows reading later returns")
    assert ok


def test_c8_study_and_backtest_are_byte_identical(report, tmp_path):
    prices = tmp_path / "prices.csv"
    write_prices(prices, *synthetic_prices(160, BT_SD, 8))
    chain = ["--length", "2000", "--burn-in", "500", "--thin", "10", "--seed", "17"]
    runs = {}
    for tag in ("a", "b"):
        study, bt = tmp_path / f"study_{tag}.csv", tmp_path / f"bt_{tag}.csv"
        assert main(["study", "--family", "gamma", "--params", "2,1;0.5,4", "--reps", "4",
                     "--sizes", "32,128", *chain, "--out", str(study)]) == 0
        assert main(["backtest", str(prices), "--warmup", "120", *chain, "--out", str(bt)]) == 0
        runs[tag] = (study.read_bytes(), bt.read_bytes())
    ok = runs["a"] == runs["b"]
    report("criterion 8 determinism", ok,
           f"study {len(runs['a'][0])} bytes, backtest {len(runs['a'][1])} bytes, reruns identical: {ok}")
    assert ok

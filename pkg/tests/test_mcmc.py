import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bayesvar.distributions import BaselineModel, GpdParams, log_likelihood, sample
from bayesvar.exceptions import InsufficientTailDataError, SetupError
from bayesvar.mcmc import (
    Block, ChainConfig, TailData, TargetSpec, bmh_baseline, gpd_loglik, ipbmh_tail_chain,
    mh_gpd_noninformative, mh_run, ratio_exponential_sigma, ratio_gamma_joint, ratio_stable_sigma,
    ratio_stable_xi,
)
from bayesvar.priors import InformativePrior


def gpd_ll(xi, sigma, x):
    return log_likelihood(GpdParams(xi, sigma), x)


@pytest.mark.parametrize("length,burn,thin,expected", [(10000, 3000, 50, 140), (100, 0, 1, 100), (101, 1, 7, 14)])
def test_retained_draw_count(length, burn, thin, expected):
    cfg = ChainConfig(length=length, burn_in=burn, thin=thin)
    assert cfg.n_keep == expected


@pytest.mark.parametrize("kwargs", [dict(thin=0), dict(burn_in=10000), dict(length=10, burn_in=5, thin=6), dict(seed=-1)])
def test_chain_config_validation(kwargs):
    with pytest.raises(ValueError):
        ChainConfig(**kwargs)


def test_gpd_loglik_matches_density_and_padding():
    x = np.array([0.3, 1.2, 0.05, 2.5])
    for xi, s in [(0.3, 1.1), (0.0, 0.7), (-0.2, 2.0)]:
        assert gpd_loglik(xi, s, x)[0] == pytest.approx(gpd_ll(xi, s, x), rel=1e-12)
    tail = TailData.from_rows([x, x[:2]])
    ll = gpd_loglik(np.array([0.3, 0.3]), np.array([1.1, 1.1]), tail)
    assert ll[1] == pytest.approx(gpd_ll(0.3, 1.1, x[:2]), rel=1e-12)
    assert gpd_loglik(-0.5, 1.0, x)[0] == -math.inf


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_ratios_equal_likelihood_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.exponential(1.0, rng.integers(1, 15))
    s0, s1 = rng.uniform(0.3, 3.0, 2)
    x0, x1 = rng.uniform(0.01, 0.6, 2)
    prior = InformativePrior(rng.normal(0, 0.3), rng.uniform(0.02, 0.5))
    lp = lambda v: stats.norm(prior.mean, prior.sd).logpdf(v)

    assert ratio_exponential_sigma(s0, s1, x) == pytest.approx(gpd_ll(0.0, s1, x) - gpd_ll(0.0, s0, x), abs=1e-10)
    assert ratio_gamma_joint(GpdParams(x0, s0), GpdParams(x1, s1), x) == pytest.approx(
        gpd_ll(x1, s1, x) - gpd_ll(x0, s0, x), abs=1e-10)
    assert ratio_stable_xi(x0, x1, s0, x, prior) == pytest.approx(
        gpd_ll(x1, s0, x) - gpd_ll(x0, s0, x) + lp(x1) - lp(x0), abs=1e-10)
    assert ratio_stable_sigma(s0, s1, x0, x, prior) == pytest.approx(
        gpd_ll(x0, s1, x) - gpd_ll(x0, s0, x) + lp(s1) - lp(s0), abs=1e-10)


def test_ratio_antisymmetry_and_support():
    x = np.array([0.5, 1.0, 4.0])
    prior = InformativePrior(0.1, 0.2)
    assert ratio_stable_xi(0.1, 0.3, 1.0, x, prior) == pytest.approx(-ratio_stable_xi(0.3, 0.1, 1.0, x, prior))
    assert ratio_exponential_sigma(1.0, 2.0, x) == pytest.approx(-ratio_exponential_sigma(2.0, 1.0, x))
    # a proposal that puts an excess beyond the upper endpoint is impossible
    assert ratio_stable_xi(0.1, -0.5, 1.0, x, prior) == -math.inf
    assert ratio_exponential_sigma(1.0, -1.0, x) == -math.inf


def test_ratios_vectorize():
    x = np.array([0.2, 0.9])
    out = ratio_exponential_sigma(np.array([1.0, 2.0]), np.array([1.5, 1.5]), x)
    assert out.shape == (2,)


def test_sampler_recovers_known_normal():
    # N(3, 2) target; mean and sd of the draws should match
    spec = TargetSpec(lambda th, _: -0.5 * ((th[:, 0] - 3.0) / 2.0) ** 2, [Block((0,))])
    chain = mh_run(spec, np.array([0.0]), None, ChainConfig(length=40000, burn_in=2000, thin=4, seed=1))
    assert chain.mean()[0] == pytest.approx(3.0, abs=0.15)
    assert chain.sd()[0] == pytest.approx(2.0, abs=0.15)
    assert 0.15 < chain.acceptance_rate[0] < 0.5


def test_batched_chains_match_single_runs():
    spec = TargetSpec(lambda th, _: -0.5 * np.sum(th * th, axis=1), [Block((0,)), Block((1,))], scale=np.array([1.0, 1.0]))
    cfg = ChainConfig(length=500, burn_in=100, thin=2, seed=5)
    batch = mh_run(spec, np.zeros((3, 2)), None, cfg, keys=[(5, i) for i in range(3)])
    single = mh_run(spec, np.zeros(2), None, cfg.with_(seed=5), keys=[(5, 1)])
    np.testing.assert_array_equal(batch[1].draws, single.draws)


def test_sampler_is_deterministic(quick_cfg):
    x = sample(GpdParams(0.2, 1.0), 60, 4)
    a = mh_gpd_noninformative(x, quick_cfg)
    b = mh_gpd_noninformative(x, quick_cfg)
    np.testing.assert_array_equal(a.draws, b.draws)
    c = mh_gpd_noninformative(x, quick_cfg.with_(seed=4))
    assert not np.array_equal(a.draws, c.draws)


def test_positivity_never_violated(quick_cfg):
    x = sample(GpdParams(0.1, 0.01), 40, 8)
    chain = mh_gpd_noninformative(x, quick_cfg)
    assert np.all(chain["sigma"] > 0)
    assert np.all(1 + chain["xi"] * x.max() / chain["sigma"] > 0)


def test_noninformative_chain_recovers_gpd():
    x = sample(GpdParams(0.25, 2.0), 2000, 13)
    chain = mh_gpd_noninformative(x, ChainConfig(length=6000, burn_in=1500, thin=5, seed=2))
    xi, sigma = chain.mean()
    assert abs(xi - 0.25) < 4 * chain.sd()[0]
    assert abs(sigma - 2.0) < 4 * chain.sd()[1]


def test_noninformative_needs_two_exceedances(quick_cfg):
    with pytest.raises(InsufficientTailDataError):
        mh_gpd_noninformative(np.array([1.0]), quick_cfg)


def test_infeasible_start_is_a_setup_error():
    spec = TargetSpec(lambda th, _: np.where(th[:, 0] > 0, 0.0, -np.inf), [Block((0,))])
    with pytest.raises(SetupError):
        mh_run(spec, np.array([-1.0]), None, ChainConfig(length=10, burn_in=0, thin=1))


@pytest.mark.parametrize("model", [
    BaselineModel.exponential(2.0), BaselineModel.gamma(2.0, 0.5),
    BaselineModel.normal(1.0, 3.0), BaselineModel.cauchy(-2.0, 0.5),
], ids=repr)
def test_baseline_chain_recovers_parameters(model):
    x = sample(model, 3000, 21)
    chain = bmh_baseline(model.family, x, ChainConfig(length=4000, burn_in=1000, thin=3, seed=9))
    for est, true, sd in zip(chain.mean(), model.params, chain.sd()):
        assert abs(est - true) < 4.5 * sd + 1e-9


def test_baseline_support_checks(quick_cfg):
    with pytest.raises(SetupError):
        bmh_baseline("exp", np.array([1.0, -1.0, 2.0]), quick_cfg)
    with pytest.raises(SetupError):
        bmh_baseline("gamma", np.array([1.0, 0.0]), quick_cfg)
    with pytest.raises(SetupError):
        bmh_baseline("normal", np.array([1.0]), quick_cfg)


def test_informative_exponential_chain_pins_shape(quick_cfg):
    x = sample(BaselineModel.exponential(1.0), 100, 3)
    chain = ipbmh_tail_chain("exp", x, [1.0], 0.9, quick_cfg)
    assert np.all(chain["xi"] == 0.0)
    assert chain["sigma"].mean() == pytest.approx(1.0, abs=0.2)


def test_informative_gamma_start_is_feasible(quick_cfg):
    # strongly negative prior shape would put the largest excess off-support at the prior mean
    x = np.array([0.1, 0.3, 9.0])
    chain = ipbmh_tail_chain("gamma", x, [0.02, 1.0], 0.9, quick_cfg)
    assert np.all(1 + chain["xi"] * 9.0 / chain["sigma"] > 0)

"""End-to-end VaR/CVaR estimation from a raw sample.

Three pipelines:

* ``mh``    -- GPD fitted to the exceedances alone, non-informative priors.
* ``bmh``   -- baseline parameters from the full sample, closed-form measures.
* ``ipbmh`` -- baseline parameters first, then an exceedance chain whose
  priors come from the baseline-to-tail relationships.

Each posterior draw is mapped to (VaR, CVaR); the estimate is the draw
mean and the bounds are the 2.5% / 97.5% draw quantiles.

The ``*_many`` entry points run one pipeline over many samples at once
(vectorized chains); they return one ``RiskEstimate`` or one exception
per sample so a failing replication does not sink the batch.
"""

from dataclasses import dataclass
from enum import Enum
import math
from typing import Optional

import numpy as np

from .distributions import Family
from .exceptions import InsufficientTailDataError, SetupError
from .mcmc import ChainConfig, TailData, _bmh_batch, _check_support, _ipbmh_tail_batch, _mh_tail_batch
from .risk import risk_exponential, risk_gamma, risk_normal, tail_probability, transfer_draws, var_cauchy

STAGE_BASELINE = 1
STAGE_TAIL = 2
BOUNDS = (2.5, 97.5)


class Method(str, Enum):
    MH = "mh"
    BMH = "bmh"
    IPBMH = "ipbmh"

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(getattr(name, "value", name)).strip().lower())
        except ValueError:
            raise ValueError(f"unknown method {name!r}; choose from mh, bmh, ipbmh") from None

    @property
    def needs_family(self):
        return self is not Method.MH


@dataclass(frozen=True)
class ExceedanceSet:
    u: float
    values: np.ndarray
    m: int


@dataclass(frozen=True)
class RiskEstimate:
    """Point estimate and 2.5%/97.5% posterior bounds of VaR_p and CVaR_p."""

    method: Method
    p: float
    p_u: float
    n: int
    var_point: float
    var_lo: float
    var_hi: float
    cvar_point: Optional[float] = None
    cvar_lo: Optional[float] = None
    cvar_hi: Optional[float] = None
    threshold: Optional[float] = None
    m: Optional[int] = None

    @property
    def has_cvar(self):
        return self.cvar_point is not None

    def measure(self, name):
        """``(point, lo, hi)`` for ``"var"`` or ``"cvar"`` (Nones if absent)."""
        if name == "var":
            return self.var_point, self.var_lo, self.var_hi
        if name == "cvar":
            return self.cvar_point, self.cvar_lo, self.cvar_hi
        raise KeyError(name)


def threshold_rank(n, p_u):
    """1-based rank of the order statistic used as the empirical p_u-quantile."""
    # guard against n * p_u landing a hair above an integer
    return max(1, math.ceil(n * p_u - 1e-9))


def extract_exceedances(sample, p_u) -> ExceedanceSet:
    """Threshold at the empirical p_u-quantile and the strictly positive excesses over it."""
    if not 0 < p_u < 1:
        raise ValueError("p_u must lie in (0, 1)")
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    if x.size == 0:
        raise InsufficientTailDataError("empty sample")
    u = float(x[threshold_rank(x.size, p_u) - 1])
    values = x[x > u] - u
    if values.size == 0:
        raise InsufficientTailDataError(f"no observation strictly above the threshold u={u:g}")
    return ExceedanceSet(u, values, int(values.size))


def _summarize(method, p, p_u, n, var_draws, cvar_draws, threshold=None, m=None):
    var_draws = np.asarray(var_draws, dtype=float)
    lo, hi = np.percentile(var_draws, BOUNDS)
    fields = dict(var_point=float(np.mean(var_draws)), var_lo=float(lo), var_hi=float(hi))
    if cvar_draws is not None:
        cvar_draws = np.asarray(cvar_draws, dtype=float)
        valid = cvar_draws[~np.isnan(cvar_draws)]
        # CVaR is reported only if at most half of the draws lack it
        if valid.size and valid.size >= 0.5 * cvar_draws.size:
            clo, chi = np.percentile(valid, BOUNDS)
            fields.update(cvar_point=float(np.mean(valid)), cvar_lo=float(clo), cvar_hi=float(chi))
    return RiskEstimate(method, float(p), float(p_u), int(n), threshold=threshold, m=m, **fields)


def _closed_form_draws(family, draws, p):
    if family is Family.EXPONENTIAL:
        r = risk_exponential(draws[:, 0], p)
        return r.var, r.cvar
    if family is Family.GAMMA:
        r = risk_gamma(draws[:, 0], draws[:, 1], p)
        return r.var, r.cvar
    if family is Family.NORMAL:
        r = risk_normal(draws[:, 0], draws[:, 1], p)
        return r.var, r.cvar
    return var_cauchy(draws[:, 0], draws[:, 1], p), None


def _default_keys(cfg, count):
    return [(cfg.seed,)] if count == 1 else [(cfg.seed, i) for i in range(count)]


def _split_tails(samples, p_u, minimum):
    """Exceedance sets per sample, or the exception explaining why there is none."""
    out = []
    for s in samples:
        try:
            ex = extract_exceedances(s, p_u)
            if ex.m < minimum:
                raise InsufficientTailDataError(f"{ex.m} exceedance(s); at least {minimum} needed")
            out.append(ex)
        except (InsufficientTailDataError, ValueError) as err:
            out.append(err)
    return out


def _split_baseline(family, samples):
    out = []
    for s in samples:
        try:
            _check_support(family, np.asarray(s, dtype=float).ravel())
            out.append(None)
        except SetupError as err:
            out.append(err)
    return out


def mh_many(samples, p, p_u, cfg: ChainConfig, keys=None):
    """MH pipeline over a list of samples; one result or exception per sample."""
    tail_probability(p, p_u)
    keys = keys or _default_keys(cfg, len(samples))
    tails = _split_tails(samples, p_u, 2)
    results = list(tails)
    good = [i for i, t in enumerate(tails) if isinstance(t, ExceedanceSet)]
    if good:
        tail = TailData.from_rows([tails[i].values for i in good])
        (draws, _), _ = _mh_tail_batch(tail, cfg, [tuple(keys[i]) + (STAGE_TAIL,) for i in good])
        for row, i in enumerate(good):
            ex = tails[i]
            var, cvar = transfer_draws(ex.u, p, p_u, draws[row, :, 0], draws[row, :, 1])
            results[i] = _summarize(Method.MH, p, p_u, len(samples[i]), var, cvar, ex.u, ex.m)
    return results


def bmh_many(samples, family, p, cfg: ChainConfig, keys=None, p_u=0.9):
    """BMH pipeline over a list of samples; ``p_u`` is only recorded."""
    family = Family.parse(family)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    keys = keys or _default_keys(cfg, len(samples))
    results = _split_baseline(family, samples)
    good = [i for i, r in enumerate(results) if r is None]
    if good:
        draws, _ = _bmh_batch(family, [samples[i] for i in good], cfg,
                              [tuple(keys[i]) + (STAGE_BASELINE,) for i in good])
        for row, i in enumerate(good):
            var, cvar = _closed_form_draws(family, draws[row], p)
            results[i] = _summarize(Method.BMH, p, p_u, len(samples[i]), var, cvar)
    return results


def ipbmh_many(samples, family, p, p_u, cfg: ChainConfig, keys=None, baseline_params=None):
    """IPBMH pipeline over a list of samples.

    ``baseline_params`` (one row per sample, or one row for all) skips
    the baseline chain and builds the priors from the given values.
    """
    family = Family.parse(family)
    tail_probability(p, p_u)
    keys = keys or _default_keys(cfg, len(samples))
    tails = _split_tails(samples, p_u, 1)
    base_err = _split_baseline(family, samples) if baseline_params is None else [None] * len(samples)
    results = [t if not isinstance(t, ExceedanceSet) else e for t, e in zip(tails, base_err)]
    good = [i for i, r in enumerate(results) if r is None]
    if not good:
        return results

    if baseline_params is None:
        draws, _ = _bmh_batch(family, [samples[i] for i in good], cfg,
                              [tuple(keys[i]) + (STAGE_BASELINE,) for i in good])
        baseline = draws.mean(axis=1)
    else:
        baseline = np.atleast_2d(np.asarray(baseline_params, dtype=float))
        if baseline.shape[0] == 1:
            baseline = np.repeat(baseline, len(samples), axis=0)
        baseline = baseline[good]

    tail = TailData.from_rows([tails[i].values for i in good])
    tail_draws, _ = _ipbmh_tail_batch(family, tail, baseline, p_u, cfg,
                                      [tuple(keys[i]) + (STAGE_TAIL,) for i in good])
    for row, i in enumerate(good):
        ex = tails[i]
        var, cvar = transfer_draws(ex.u, p, p_u, tail_draws[row, :, 0], tail_draws[row, :, 1])
        if family is Family.CAUCHY:
            cvar = None
        results[i] = _summarize(Method.IPBMH, p, p_u, len(samples[i]), var, cvar, ex.u, ex.m)
    return results


def estimate_many(method, samples, p, p_u, cfg: ChainConfig, family=None, keys=None):
    method = Method.parse(method)
    if method.needs_family and family is None:
        raise ValueError(f"method {method.value} requires a baseline family")
    if method is Method.MH:
        return mh_many(samples, p, p_u, cfg, keys)
    if method is Method.BMH:
        return bmh_many(samples, family, p, cfg, keys, p_u=p_u)
    return ipbmh_many(samples, family, p, p_u, cfg, keys)


def _one(results):
    (res,) = results
    if isinstance(res, Exception):
        raise res
    return res


def estimate_mh(sample, p, p_u, cfg: ChainConfig) -> RiskEstimate:
    return _one(mh_many([np.asarray(sample, dtype=float)], p, p_u, cfg))


def estimate_bmh(sample, family, p, p_u, cfg: ChainConfig) -> RiskEstimate:
    return _one(bmh_many([np.asarray(sample, dtype=float)], family, p, cfg, p_u=p_u))


def estimate_ipbmh(sample, family, p, p_u, cfg: ChainConfig, baseline_params=None) -> RiskEstimate:
    return _one(ipbmh_many([np.asarray(sample, dtype=float)], family, p, p_u, cfg,
                           baseline_params=baseline_params))


def estimate(method, sample, p, p_u, cfg: ChainConfig, family=None) -> RiskEstimate:
    return _one(estimate_many(method, [np.asarray(sample, dtype=float)], p, p_u, cfg, family))

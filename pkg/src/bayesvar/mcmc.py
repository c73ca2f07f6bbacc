"""Metropolis-Hastings machinery for the baseline and exceedance models.

``mh_run`` drives one chain, or a batch of independent chains in
lockstep (one row of ``init`` per chain). Batching is purely a speed
device: every chain owns its random stream, so chain ``i`` of a batch
follows the same path it would follow on its own.

Exceedance sets of unequal size are stored zero-padded (``TailData``);
a zero excess adds nothing to any of the sums in the GPD likelihood, so
only the per-row count ``m`` needs to be tracked.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from ._rng import check_seed, make_rng
from .distributions import Family, GpdParams
from .exceptions import InsufficientTailDataError, SetupError
from .priors import InformativePrior, exponential_tail_prior, gamma_priors, stable_priors

TARGET_ACCEPT = 0.3
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ChainConfig:
    """Chain length, burn-in, thinning and seed.

    ``proposal_scale`` overrides the random-walk step sizes a target
    would otherwise choose; steps are adapted during burn-in either way
    and frozen afterwards.
    """

    length: int = 10000
    burn_in: int = 3000
    thin: int = 50
    proposal_scale: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        check_seed(self.seed)
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.burn_in < self.length:
            raise ValueError("burn_in must lie in [0, length)")
        if self.n_keep < 1:
            raise ValueError("chain settings retain no draws")
        if self.proposal_scale is not None and not all(s > 0 for s in self.proposal_scale):
            raise ValueError("proposal scales must be > 0")

    @property
    def n_keep(self):
        return (self.length - self.burn_in) // self.thin

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class Chain:
    draws: np.ndarray
    acceptance_rate: np.ndarray
    names: tuple = ()

    def __getitem__(self, name):
        return self.draws[:, self.names.index(name)]

    def mean(self):
        return self.draws.mean(axis=0)

    def sd(self):
        return self.draws.std(axis=0, ddof=1)


@dataclass(frozen=True)
class Block:
    """One parameter block of a sweep.

    With ``log_ratio`` unset the acceptance ratio is the difference of
    the target's log density. Setting ``proposal_mean``/``proposal_sd``
    turns the block into an independence sampler drawing from that
    normal; otherwise it is a Gaussian random walk.
    """

    index: tuple
    log_ratio: Optional[Callable] = None
    proposal_mean: Optional[np.ndarray] = None
    proposal_sd: Optional[np.ndarray] = None

    @property
    def independent(self):
        return self.proposal_sd is not None


@dataclass(frozen=True)
class TargetSpec:
    log_target: Callable
    blocks: Sequence[Block]
    positive: tuple = ()
    scale: Optional[np.ndarray] = None
    names: tuple = field(default=())


def mh_run(target: TargetSpec, init, data, cfg: ChainConfig, keys=None):
    """Blockwise Metropolis-Hastings.

    Random-walk steps start at ``cfg.proposal_scale`` (else
    ``target.scale``), are tuned by Robbins-Monro towards a 0.3
    acceptance rate during burn-in, then frozen. Proposals with a
    non-positive value in ``target.positive`` are rejected outright.

    Returns a ``Chain`` for 1-D ``init``, a list of chains for a 2-D
    batch. ``keys`` gives each chain's stream as ``(seed, *stream)``.
    """
    single = np.ndim(init) == 1
    cur = np.atleast_2d(np.asarray(init, dtype=float)).copy()
    B, d = cur.shape
    if keys is None:
        keys = [(cfg.seed,)] if single else [(cfg.seed, i) for i in range(B)]
    draws, acc = _run(target, cur, data, cfg, keys)
    chains = [Chain(draws[i], acc[i], tuple(target.names)) for i in range(B)]
    return chains[0] if single else chains


def _run(target, cur, data, cfg, keys):
    B, d = cur.shape
    if len(keys) != B:
        raise ValueError("one stream key per chain is required")
    with np.errstate(all="ignore"):
        lt = np.asarray(target.log_target(cur, data), dtype=float)
    if not np.all(np.isfinite(lt)):
        bad = np.flatnonzero(~np.isfinite(lt)).tolist()
        raise SetupError(f"initial state has zero target density for chain(s) {bad}")

    if cfg.proposal_scale is not None:
        scale = np.asarray(cfg.proposal_scale, dtype=float)
    elif target.scale is not None:
        scale = np.asarray(target.scale, dtype=float)
    else:
        scale = 0.1 * np.maximum(np.abs(cur), 1e-2)
    log_scale = np.log(np.broadcast_to(scale, (B, d))).copy()

    L, nb = cfg.length, len(target.blocks)
    eps = np.empty((L, B, d))
    logu = np.empty((L, B, nb))
    for i, key in enumerate(keys):
        rng = make_rng(*key)
        eps[:, i, :] = rng.standard_normal((L, d))
        with np.errstate(divide="ignore"):
            logu[:, i, :] = np.log(rng.random((L, nb)))

    blocks = [(list(b.index), b, [j for j in b.index if j in target.positive]) for b in target.blocks]
    out = np.empty((B, cfg.n_keep, d))
    accepted = np.zeros((B, d))
    kept = 0
    for t in range(L):
        gain = (t + 1.0) ** -0.6
        for k, (idx, blk, pos) in enumerate(blocks):
            prop = cur.copy()
            e = eps[t][:, idx]
            if blk.independent:
                prop[:, idx] = blk.proposal_mean + blk.proposal_sd * e
            else:
                prop[:, idx] = cur[:, idx] + np.exp(log_scale[:, idx]) * e
            with np.errstate(all="ignore"):
                if blk.log_ratio is None:
                    lt_prop = target.log_target(prop, data)
                    lr = lt_prop - lt
                else:
                    lr = blk.log_ratio(cur, prop, data)
            for j in pos:
                lr = np.where(prop[:, j] > 0, lr, -np.inf)
            ok = logu[t, :, k] < lr
            if ok.any():
                cur[ok] = prop[ok]
                if blk.log_ratio is None:
                    lt = np.where(ok, lt_prop, lt)
            if t < cfg.burn_in:
                if not blk.independent:
                    log_scale[:, idx] += (gain * (ok - TARGET_ACCEPT))[:, None]
            else:
                accepted[:, idx] += ok[:, None]
        if t >= cfg.burn_in and (t - cfg.burn_in + 1) % cfg.thin == 0:
            out[:, kept] = cur
            kept += 1
    return out, accepted / (L - cfg.burn_in)


# -- exceedance likelihood ---------------------------------------------------

@dataclass(frozen=True)
class TailData:
    """Exceedances of one or more samples, zero-padded to a common width."""

    values: np.ndarray
    m: np.ndarray

    @classmethod
    def from_rows(cls, rows):
        rows = [np.asarray(r, dtype=float).ravel() for r in rows]
        width = max((len(r) for r in rows), default=0)
        values = np.zeros((len(rows), max(width, 1)))
        for i, r in enumerate(rows):
            values[i, : len(r)] = r
        return cls(values, np.array([len(r) for r in rows], dtype=float))

    @cached_property
    def total(self):
        return self.values.sum(axis=1)

    @cached_property
    def xmax(self):
        return self.values.max(axis=1)


def _as_tail(exceedances):
    if isinstance(exceedances, TailData):
        return exceedances
    x = np.asarray(exceedances, dtype=float)
    if x.ndim == 1:
        return TailData.from_rows([x])
    return TailData(x, np.full(x.shape[0], x.shape[1], dtype=float))


def _gpd_sum(xi, sigma, tail):
    """``sum_i (1 + 1/xi) log(1 + xi x_i / sigma)`` per row, plus a support flag."""
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    safe_sigma = np.where(sigma > 0, sigma, 1.0)
    z = xi[..., None] * tail.values / safe_sigma[..., None]
    ok = np.all(z > -1.0, axis=-1) & (sigma > 0)
    s_log = np.log1p(np.where(z > -1.0, z, 0.0)).sum(axis=-1)
    safe_xi = np.where(xi == 0, 1.0, xi)
    s = np.where(xi == 0, tail.total / safe_sigma, s_log * (1.0 + 1.0 / safe_xi))
    return s, ok


def gpd_loglik(xi, sigma, exceedances):
    """GPD log-likelihood per row of ``exceedances``; ``-inf`` off-support."""
    tail = _as_tail(exceedances)
    s, ok = _gpd_sum(xi, sigma, tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = -tail.m * np.log(sigma) - s
    return np.where(ok, ll, -np.inf)


def _prior_log_ratio(cur, prop, prior):
    # the printed form: (1 / (2 b^2)) [(old - mean)^2 - (new - mean)^2]
    return ((cur - prior.mean) ** 2 - (prop - prior.mean) ** 2) / (2.0 * np.asarray(prior.sd) ** 2)


def _normal_logpdf(x, prior):
    sd = np.asarray(prior.sd)
    return -0.5 * ((x - prior.mean) / sd) ** 2 - np.log(sd) - 0.5 * _LOG_2PI


def _scalar_out(value, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(np.asarray(value).reshape(-1)[0])
    return value


def _r_exponential(s_cur, s_prop, tail):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = tail.m * np.log(s_cur / s_prop) + (1.0 / s_cur - 1.0 / s_prop) * tail.total
    return np.where(s_prop > 0, r, -np.inf)


def _r_stable_xi(xi_cur, xi_prop, s_cur, tail, prior):
    s_new, ok = _gpd_sum(xi_prop, s_cur, tail)
    s_old, _ = _gpd_sum(xi_cur, s_cur, tail)
    r = _prior_log_ratio(xi_cur, xi_prop, prior) - s_new + s_old
    return np.where(ok, r, -np.inf)


def _r_stable_sigma(s_cur, s_prop, xi_cur, tail, prior):
    s_new, ok = _gpd_sum(xi_cur, s_prop, tail)
    s_old, _ = _gpd_sum(xi_cur, s_cur, tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = tail.m * np.log(s_cur / s_prop) + _prior_log_ratio(s_cur, s_prop, prior) - s_new + s_old
    return np.where(ok, r, -np.inf)


def _r_gamma_joint(xi_cur, s_cur, xi_prop, s_prop, tail):
    s_new, ok = _gpd_sum(xi_prop, s_prop, tail)
    s_old, _ = _gpd_sum(xi_cur, s_cur, tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = tail.m * np.log(s_cur / s_prop) - s_new + s_old
    return np.where(ok, r, -np.inf)


def ratio_exponential_sigma(sigma_cur, sigma_prop, exceedances):
    """Log acceptance ratio for the scale of an exponential (xi = 0) tail."""
    tail = _as_tail(exceedances)
    r = _r_exponential(np.asarray(sigma_cur, float), np.asarray(sigma_prop, float), tail)
    return _scalar_out(r, sigma_cur, sigma_prop)


def ratio_stable_xi(xi_cur, xi_prop, sigma_cur, exceedances, prior: InformativePrior):
    """Log ratio for a shape update under the N(xi_Z, b1) prior, scale held at ``sigma_cur``."""
    tail = _as_tail(exceedances)
    r = _r_stable_xi(np.asarray(xi_cur, float), np.asarray(xi_prop, float), np.asarray(sigma_cur, float), tail, prior)
    return _scalar_out(r, xi_cur, xi_prop, sigma_cur)


def ratio_stable_sigma(sigma_cur, sigma_prop, xi_cur, exceedances, prior: InformativePrior):
    """Log ratio for a scale update under the N(a sigma_Z, b2) prior, shape held at ``xi_cur``."""
    tail = _as_tail(exceedances)
    r = _r_stable_sigma(np.asarray(sigma_cur, float), np.asarray(sigma_prop, float), np.asarray(xi_cur, float), tail, prior)
    return _scalar_out(r, sigma_cur, sigma_prop, xi_cur)


def ratio_gamma_joint(theta_cur: GpdParams, theta_prop: GpdParams, exceedances):
    """Log likelihood ratio for a joint (xi, sigma) move; the prior does not enter."""
    tail = _as_tail(exceedances)
    r = _r_gamma_joint(np.asarray(theta_cur.xi, float), np.asarray(theta_cur.sigma, float),
                       np.asarray(theta_prop.xi, float), np.asarray(theta_prop.sigma, float), tail)
    return _scalar_out(r, theta_cur.xi, theta_prop.xi)


# -- exceedance chains ------------------------------------------------------

GPD_NAMES = ("xi", "sigma")


def _check_tail(tail, minimum):
    if np.any(tail.m < minimum):
        raise InsufficientTailDataError(f"need at least {minimum} exceedance(s) per sample")


def _noninformative_target(tail):
    def log_target(theta, _data):
        # flat in xi, flat in log sigma
        return gpd_loglik(theta[:, 0], theta[:, 1], tail) - np.log(theta[:, 1])

    mean_excess = tail.total / tail.m
    init = np.column_stack([np.full(len(tail.m), 0.1), mean_excess])
    spec = TargetSpec(
        log_target=log_target,
        blocks=[Block((0,)), Block((1,))],
        positive=(1,),
        scale=np.column_stack([np.full(len(tail.m), 0.1), 0.1 * mean_excess]),
        names=GPD_NAMES,
    )
    return spec, init


def _mh_tail_batch(tail, cfg, keys):
    _check_tail(tail, 2)
    spec, init = _noninformative_target(tail)
    return _run(spec, init, None, cfg, keys), spec.names


def mh_gpd_noninformative(exceedances, cfg: ChainConfig) -> Chain:
    """Posterior draws of (xi, sigma) from exceedances alone (flat / flat-in-log priors)."""
    tail = _as_tail(exceedances)
    (draws, acc), names = _mh_tail_batch(tail, cfg, [(cfg.seed,)])
    return Chain(draws[0], acc[0], names)


def _feasible_shape(xi0, sigma0, tail):
    """Move a negative starting shape just enough that every excess is in the support."""
    limit = -sigma0 / np.where(tail.xmax > 0, tail.xmax, np.inf)
    return np.where(xi0 > limit, xi0, 0.5 * limit)


def _informative_target(family, tail, baseline, p_u):
    """Target, starting state and column names of the informative exceedance chain.

    ``baseline`` holds one row of baseline parameter estimates per chain.
    """
    B = len(tail.m)
    baseline = np.atleast_2d(np.asarray(baseline, dtype=float))
    if family is Family.EXPONENTIAL:
        prior = exponential_tail_prior(baseline[:, 0])

        def log_target(theta, _data):
            return gpd_loglik(0.0 * theta[:, 0], theta[:, 0], tail) + _normal_logpdf(theta[:, 0], prior)

        def log_ratio(cur, prop, _data):
            return _r_exponential(cur[:, 0], prop[:, 0], tail)

        block = Block((0,), log_ratio, prior.mean[:, None], prior.sd[:, None])
        spec = TargetSpec(log_target, [block], positive=(0,), names=("sigma",))
        return spec, prior.mean[:, None].copy()

    if family is Family.GAMMA:
        p_xi, p_sigma = gamma_priors(baseline[:, 0], baseline[:, 1])

        def log_target(theta, _data):
            return (gpd_loglik(theta[:, 0], theta[:, 1], tail)
                    + _normal_logpdf(theta[:, 0], p_xi) + _normal_logpdf(theta[:, 1], p_sigma))

        def log_ratio(cur, prop, _data):
            return _r_gamma_joint(cur[:, 0], cur[:, 1], prop[:, 0], prop[:, 1], tail)

        block = Block((0, 1), log_ratio,
                      np.column_stack([p_xi.mean, p_sigma.mean]),
                      np.column_stack([p_xi.sd, p_sigma.sd]))
        init = np.column_stack([_feasible_shape(p_xi.mean, p_sigma.mean, tail), p_sigma.mean])
        spec = TargetSpec(log_target, [block], positive=(1,), names=GPD_NAMES)
        return spec, init

    if family in (Family.NORMAL, Family.CAUCHY):
        p_xi, p_sigma = stable_priors(family, p_u, baseline[:, 1])
        p_xi = InformativePrior(np.full(B, p_xi.mean), np.full(B, p_xi.sd))
        p_sigma = InformativePrior(np.asarray(p_sigma.mean) * np.ones(B), np.full(B, p_sigma.sd))

        def log_target(theta, _data):
            return (gpd_loglik(theta[:, 0], theta[:, 1], tail)
                    + _normal_logpdf(theta[:, 0], p_xi) + _normal_logpdf(theta[:, 1], p_sigma))

        def ratio_xi(cur, prop, _data):
            return _r_stable_xi(cur[:, 0], prop[:, 0], cur[:, 1], tail, p_xi)

        def ratio_sigma(cur, prop, _data):
            return _r_stable_sigma(cur[:, 1], prop[:, 1], cur[:, 0], tail, p_sigma)

        init = np.column_stack([_feasible_shape(p_xi.mean, p_sigma.mean, tail), p_sigma.mean])
        spec = TargetSpec(
            log_target,
            [Block((0,), ratio_xi), Block((1,), ratio_sigma)],
            positive=(1,),
            scale=np.column_stack([p_xi.sd, p_sigma.sd]),
            names=GPD_NAMES,
        )
        return spec, init

    raise ValueError(f"unsupported family {family!r}")


def _ipbmh_tail_batch(family, tail, baseline, p_u, cfg, keys):
    """Run the informative exceedance chains; draws always come back as (xi, sigma)."""
    _check_tail(tail, 1)
    spec, init = _informative_target(family, tail, baseline, p_u)
    draws, acc = _run(spec, init, None, cfg, keys)
    if family is Family.EXPONENTIAL:
        draws = np.concatenate([np.zeros_like(draws), draws], axis=2)
        acc = np.concatenate([np.zeros_like(acc), acc], axis=1)
    return draws, acc


def ipbmh_tail_chain(family, exceedances, baseline_params, p_u, cfg: ChainConfig) -> Chain:
    """Exceedance chain under informative priors built from baseline parameter estimates.

    Exponential: scale only (xi pinned to 0), independence proposals from
    the prior. Gamma: joint (xi, sigma) independence proposals from the
    prior. Normal/Cauchy: xi then sigma random-walk updates with the
    prior terms in the ratio.
    """
    family = Family.parse(family)
    tail = _as_tail(exceedances)
    draws, acc = _ipbmh_tail_batch(family, tail, np.atleast_2d(baseline_params), p_u, cfg, [(cfg.seed,)])
    return Chain(draws[0], acc[0], GPD_NAMES)


# -- baseline chains ----------------------------------------------------------

class _BaselineData:
    """Sufficient statistics (and padded raw values for Cauchy) of baseline samples."""

    def __init__(self, family, rows):
        rows = [np.asarray(r, dtype=float).ravel() for r in rows]
        for i, r in enumerate(rows):
            _check_support(family, r, i)
        self.family = family
        self.n = np.array([len(r) for r in rows], dtype=float)
        self.center = np.array([r.mean() for r in rows])
        self.s1 = np.array([np.sum(r - c) for r, c in zip(rows, self.center)])
        self.s2 = np.array([np.sum((r - c) ** 2) for r, c in zip(rows, self.center)])
        self.total = np.array([r.sum() for r in rows])
        if family is Family.GAMMA:
            self.slog = np.array([np.log(r).sum() for r in rows])
        if family is Family.CAUCHY:
            width = max(len(r) for r in rows)
            self.values = np.zeros((len(rows), width))
            self.mask = np.zeros((len(rows), width))
            for i, r in enumerate(rows):
                self.values[i, : len(r)] = r
                self.mask[i, : len(r)] = 1.0
        self.init, self.scale = _baseline_start(family, rows)


def _check_support(family, x, row=0):
    if len(x) < 2:
        raise SetupError(f"sample {row}: at least two observations are required")
    if not np.all(np.isfinite(x)):
        raise SetupError(f"sample {row}: non-finite observation")
    if family is Family.EXPONENTIAL and np.any(x < 0):
        raise SetupError(f"sample {row}: exponential data must be nonnegative")
    if family is Family.GAMMA and np.any(x <= 0):
        raise SetupError(f"sample {row}: gamma data must be positive")


def _baseline_start(family, rows):
    """Moment-type starting values and random-walk scales per sample."""
    init, scale = [], []
    for r in rows:
        n = len(r)
        if family is Family.EXPONENTIAL:
            lam = 1.0 / r.mean() if r.mean() > 0 else None
            if lam is None:
                raise SetupError("exponential sample has zero mean")
            init.append([lam])
            scale.append([lam / math.sqrt(n)])
        elif family is Family.GAMMA:
            m, v = r.mean(), r.var()
            if v <= 0:
                raise SetupError("gamma sample has zero variance")
            a, b = m * m / v, m / v
            init.append([a, b])
            scale.append([a / math.sqrt(n), b / math.sqrt(n)])
        elif family is Family.NORMAL:
            s = r.std()
            if s <= 0:
                raise SetupError("normal sample has zero variance")
            init.append([r.mean(), s])
            scale.append([s / math.sqrt(n), s / math.sqrt(2 * n)])
        else:
            q1, med, q3 = np.percentile(r, [25, 50, 75])
            half_iqr = 0.5 * (q3 - q1)
            if half_iqr <= 0:
                raise SetupError("cauchy sample has zero interquartile range")
            init.append([med, half_iqr])
            scale.append([half_iqr * math.sqrt(2.0 / n)] * 2)
    return np.array(init), np.array(scale)


def baseline_loglik(family, theta, data: _BaselineData):
    """Full-sample log-likelihood of each chain's baseline parameters."""
    n = data.n
    if family is Family.EXPONENTIAL:
        lam = theta[:, 0]
        return n * np.log(lam) - lam * data.total
    if family is Family.GAMMA:
        a, b = theta[:, 0], theta[:, 1]
        return n * (a * np.log(b) - gammaln(a)) + (a - 1.0) * data.slog - b * data.total
    if family is Family.NORMAL:
        mu, s = theta[:, 0], theta[:, 1]
        shift = mu - data.center
        ss = data.s2 - 2.0 * shift * data.s1 + n * shift * shift
        return -n * np.log(s) - ss / (2.0 * s * s) - 0.5 * n * _LOG_2PI
    g, dl = theta[:, 0], theta[:, 1]
    dev = data.values - g[:, None]
    terms = np.log(dl[:, None] / math.pi) - np.log(dl[:, None] ** 2 + dev * dev)
    return np.sum(terms * data.mask, axis=1)


def _bmh_batch(family, rows, cfg, keys):
    data = _BaselineData(family, rows)
    d = len(family.param_names)
    spec = TargetSpec(
        log_target=lambda theta, dat: baseline_loglik(family, theta, dat),
        blocks=[Block((j,)) for j in range(d)],
        positive=family.positive_params,
        scale=data.scale,
        names=family.param_names,
    )
    return _run(spec, data.init, data, cfg, keys)


def bmh_baseline(family, data, cfg: ChainConfig) -> Chain:
    """Posterior draws of the baseline parameters from the full sample (flat priors)."""
    family = Family.parse(family)
    draws, acc = _bmh_batch(family, [np.asarray(data, dtype=float)], cfg, [(cfg.seed,)])
    return Chain(draws[0], acc[0], family.param_names)

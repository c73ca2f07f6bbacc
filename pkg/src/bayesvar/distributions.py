"""Baseline distributions and the generalized Pareto tail model.

Densities, distribution functions, quantiles, log-likelihoods and seeded
samplers for the four baseline families (Exponential, Gamma, Normal,
Cauchy) and for the GPD. Functions accept scalars or numpy arrays for
``x``/``p`` and return the matching shape.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import special

from ._rng import make_rng

_FPMIN = 1e-300
_EPS = 1e-16


class Family(str, Enum):
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    NORMAL = "normal"
    CAUCHY = "cauchy"

    @classmethod
    def parse(cls, name):
        """Accept full names and the short aliases ``exp``/``norm``."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"exp": "exponential", "norm": "normal", "gauss": "normal"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown family {name!r}") from None

    @property
    def param_names(self):
        return _PARAM_NAMES[self]

    @property
    def positive_params(self):
        """Indices of parameters that must be strictly positive."""
        return _POSITIVE[self]


_PARAM_NAMES = {
    Family.EXPONENTIAL: ("lambda",),
    Family.GAMMA: ("alpha", "beta"),
    Family.NORMAL: ("mu", "sigma"),
    Family.CAUCHY: ("gamma", "delta"),
}
_POSITIVE = {
    Family.EXPONENTIAL: (0,),
    Family.GAMMA: (0, 1),
    Family.NORMAL: (1,),
    Family.CAUCHY: (1,),
}


@dataclass(frozen=True)
class BaselineModel:
    """A baseline family with its parameter vector.

    Gamma uses the shape/rate parameterization; Normal's second parameter
    is the standard deviation; Cauchy is (location, scale).
    """

    family: Family
    params: tuple

    def __post_init__(self):
        family = Family.parse(self.family)
        params = tuple(float(v) for v in np.atleast_1d(self.params))
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)
        if len(params) != len(family.param_names):
            raise ValueError(
                f"{family.value} takes {len(family.param_names)} parameter(s), got {len(params)}"
            )
        for i in family.positive_params:
            if not params[i] > 0:
                raise ValueError(f"{family.value} parameter {family.param_names[i]} must be > 0")
        if not all(math.isfinite(v) for v in params):
            raise ValueError("parameters must be finite")

    @classmethod
    def exponential(cls, lam):
        return cls(Family.EXPONENTIAL, (lam,))

    @classmethod
    def gamma(cls, alpha, beta):
        return cls(Family.GAMMA, (alpha, beta))

    @classmethod
    def normal(cls, mu, sigma):
        return cls(Family.NORMAL, (mu, sigma))

    @classmethod
    def cauchy(cls, gamma, delta):
        return cls(Family.CAUCHY, (gamma, delta))

    def as_dict(self):
        return dict(zip(self.family.param_names, self.params))


@dataclass(frozen=True)
class GpdParams:
    """Shape ``xi`` and scale ``sigma`` of a generalized Pareto distribution."""

    xi: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("GPD scale sigma must be > 0")

    @property
    def upper_endpoint(self):
        return -self.sigma / self.xi if self.xi < 0 else math.inf


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


# -- incomplete gamma -------------------------------------------------------

def _gamma_series(a, x):
    """Lower regularized P(a, x) by its power series (use for x < a + 1)."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    for _ in range(2000):
        ap += 1.0
        term = term * x / ap
        total += term
        if np.all(np.abs(term) <= np.abs(total) * _EPS):
            break
    return total * np.exp(-x + a * np.log(x) - special.gammaln(a))


def _gamma_cfrac(a, x):
    """Upper regularized Q(a, x) by modified Lentz continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 2000):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= _EPS):
            break
    return np.exp(-x + a * np.log(x) - special.gammaln(a)) * h


def _gamma_pq(a, x):
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    shape = a.shape
    a = a.ravel().copy()
    x = x.ravel().copy()
    p = np.zeros_like(x)
    q = np.ones_like(x)
    pos = x > 0
    use_series = pos & (x < a + 1.0)
    use_cf = pos & ~use_series
    if use_series.any():
        p[use_series] = _gamma_series(a[use_series], x[use_series])
        q[use_series] = 1.0 - p[use_series]
    if use_cf.any():
        finite = use_cf & np.isfinite(x)
        q[finite] = _gamma_cfrac(a[finite], x[finite])
        q[use_cf & ~finite] = 0.0
        p[use_cf] = 1.0 - q[use_cf]
    return p.reshape(shape), q.reshape(shape)


def regularized_gamma_p(a, x):
    """Lower regularized incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    return _out(_gamma_pq(a, x)[0])


def regularized_gamma_q(a, x):
    """Upper regularized incomplete gamma ``Q(a, x) = Gamma(a, x) / Gamma(a)``."""
    return _out(_gamma_pq(a, x)[1])


def gamma_quantile(alpha, beta, p, tol=1e-10):
    """Quantile of Gamma(alpha, rate=beta) by bracketed root finding.

    Geometric bisection on ``P(alpha, y) - p`` from the small-``y`` bound
    ``(p Gamma(alpha + 1))^(1/alpha)`` up to ``alpha + 20 sqrt(alpha)``
    (expanded if needed), then safeguarded secant steps. Works
    elementwise on arrays.
    """
    alpha, beta, p = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float), np.asarray(p, dtype=float)
    )
    shape = alpha.shape
    alpha, beta, p = alpha.ravel(), beta.ravel(), p.ravel()
    # P(a, x) <= x^a / Gamma(a + 1), so this never lies above the root
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.exp((np.log(p) + special.gammaln(alpha + 1.0)) / alpha)
    hi = np.maximum(alpha + 20.0 * np.sqrt(alpha), 2.0 * lo)
    for _ in range(200):
        short = _gamma_pq(alpha, hi)[0] < p
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)

    for _ in range(200):
        # geometric midpoint handles roots many decades below the bracket top
        mid = np.where(lo > 0, np.sqrt(lo * hi), 0.5 * hi)
        below = _gamma_pq(alpha, mid)[0] < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-6 * hi):
            break

    f_lo = _gamma_pq(alpha, lo)[0] - p
    f_hi = _gamma_pq(alpha, hi)[0] - p
    y = 0.5 * (lo + hi)
    for _ in range(50):
        denom = f_hi - f_lo
        cand = np.where(denom != 0, hi - f_hi * (hi - lo) / np.where(denom != 0, denom, 1.0), 0.5 * (lo + hi))
        cand = np.where((cand > lo) & (cand < hi), cand, 0.5 * (lo + hi))
        f = _gamma_pq(alpha, cand)[0] - p
        below = f < 0
        lo = np.where(below, cand, lo)
        f_lo = np.where(below, f, f_lo)
        hi = np.where(below, hi, cand)
        f_hi = np.where(below, f_hi, f)
        y = cand
        if np.all((np.abs(f) <= tol * 1e-3) | (hi - lo <= tol * np.maximum(cand, 1e-300))):
            break
    return _out((y / beta).reshape(shape))


# -- GPD ------------------------------------------------------------------

def _log1p_over(xi, y):
    """``log1p(xi * y) / xi`` with the ``xi = 0`` limit ``y``."""
    xi = np.asarray(xi, dtype=float)
    safe = np.where(xi == 0, 1.0, xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.log1p(safe * y) / safe
    return np.where(xi == 0, y, val)


def gpd_cdf(gpd, x):
    """GPD distribution function; clamps to 0 below and 1 above the support."""
    xi, sigma = gpd.xi, gpd.sigma
    x = np.asarray(x, dtype=float)
    y = np.maximum(x, 0.0) / sigma
    if xi < 0:
        y = np.minimum(y, -1.0 / xi)
    with np.errstate(divide="ignore"):
        val = -np.expm1(-_log1p_over(xi, y))
    val = np.where(x <= 0, 0.0, val)
    if xi < 0:
        val = np.where(x >= gpd.upper_endpoint, 1.0, val)
    return _out(val)


def gpd_quantile(xi, sigma, q):
    """Inverse GPD distribution function, elementwise over ``xi``, ``sigma``, ``q``."""
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    lq = np.log1p(-np.asarray(q, dtype=float))
    safe = np.where(xi == 0, 1.0, xi)
    with np.errstate(over="ignore", invalid="ignore"):
        val = sigma * np.expm1(-safe * lq) / safe
    return _out(np.where(xi == 0, -sigma * lq, val))


def gpd_logpdf(gpd, x):
    x = np.asarray(x, dtype=float)
    y = x / gpd.sigma
    z = gpd.xi * y
    ok = (x >= 0) & (1.0 + z > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = -math.log(gpd.sigma) - np.log1p(np.where(ok, z, 0.0)) - _log1p_over(gpd.xi, np.where(ok, y, 0.0))
    return np.where(ok, lp, -np.inf)


# -- baseline families ----------------------------------------------------

def logpdf(model, x):
    """Log density of a BaselineModel or GpdParams; ``-inf`` outside the support."""
    if isinstance(model, GpdParams):
        return _out(gpd_logpdf(model, x))
    x = np.asarray(x, dtype=float)
    fam, prm = model.family, model.params
    with np.errstate(divide="ignore", invalid="ignore"):
        if fam is Family.EXPONENTIAL:
            (lam,) = prm
            val = np.where(x >= 0, math.log(lam) - lam * x, -np.inf)
        elif fam is Family.GAMMA:
            a, b = prm
            val = a * math.log(b) - math.lgamma(a) + (a - 1.0) * np.log(x) - b * x
            val = np.where(x > 0, val, -np.inf)
            if a == 1.0:
                val = np.where(x == 0, math.log(b), val)
        elif fam is Family.NORMAL:
            mu, s = prm
            val = -0.5 * ((x - mu) / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi)
        else:
            g, d = prm
            val = math.log(d / math.pi) - np.log(d * d + (x - g) ** 2)
    return _out(val)


def pdf(model, x):
    """Density of a BaselineModel or GpdParams; 0 outside the support."""
    return _out(np.exp(logpdf(model, x)))


def cdf(model, x):
    if isinstance(model, GpdParams):
        return gpd_cdf(model, x)
    x = np.asarray(x, dtype=float)
    fam, prm = model.family, model.params
    if fam is Family.EXPONENTIAL:
        val = np.where(x > 0, -np.expm1(-prm[0] * np.maximum(x, 0.0)), 0.0)
    elif fam is Family.GAMMA:
        val = np.asarray(regularized_gamma_p(prm[0], prm[1] * np.maximum(x, 0.0)))
    elif fam is Family.NORMAL:
        val = special.ndtr((x - prm[0]) / prm[1])
    else:
        val = 0.5 + np.arctan((x - prm[0]) / prm[1]) / math.pi
    return _out(val)


def quantile(model, p):
    """Inverse distribution function; ``p`` must lie strictly inside (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise ValueError("quantile level p must lie in (0, 1)")
    if isinstance(model, GpdParams):
        return gpd_quantile(model.xi, model.sigma, p_arr)
    fam, prm = model.family, model.params
    if fam is Family.EXPONENTIAL:
        return _out(-np.log1p(-p_arr) / prm[0])
    if fam is Family.GAMMA:
        return gamma_quantile(prm[0], prm[1], p_arr)
    if fam is Family.NORMAL:
        return _out(prm[0] + prm[1] * special.ndtri(p_arr))
    return _out(prm[0] + prm[1] * np.tan(math.pi * (p_arr - 0.5)))


def log_likelihood(model, data):
    """Sum of log densities over ``data``; ``-inf`` if any point is off-support."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("log_likelihood needs at least one observation")
    return float(np.sum(logpdf(model, data)))


def sample(model, n, seed, *stream):
    """Draw ``n`` i.i.d. values, reproducible from ``(seed, *stream)``.

    ``seed`` may also be an existing ``numpy.random.Generator``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = make_rng(seed, *stream)
    if isinstance(model, GpdParams):
        return np.asarray(gpd_quantile(model.xi, model.sigma, rng.random(n)), dtype=float)
    fam, prm = model.family, model.params
    if fam is Family.EXPONENTIAL:
        return rng.exponential(1.0 / prm[0], n)
    if fam is Family.GAMMA:
        return rng.gamma(prm[0], 1.0 / prm[1], n)
    if fam is Family.NORMAL:
        return rng.normal(prm[0], prm[1], n)
    return prm[0] + prm[1] * rng.standard_cauchy(n)

"""Closed-form Value at Risk / Conditional Value at Risk.

All closed forms accept scalars or numpy arrays so posterior draws can
be mapped in one call. ``cvar_numeric_oracle`` integrates the tail mean
directly and is kept free of the closed forms it is used to check.
"""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from scipy import integrate, special

from .distributions import Family, GpdParams, gamma_quantile, gpd_quantile, pdf, quantile, regularized_gamma_q
from .exceptions import UndefinedMeasureError


@dataclass(frozen=True)
class RiskMeasures:
    var: float
    cvar: Optional[float] = None

    def __post_init__(self):
        if self.cvar is not None and np.any(np.asarray(self.cvar) < np.asarray(self.var)):
            raise ValueError("CVaR cannot be below VaR")


def _check_p(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise ValueError("risk level p must lie in (0, 1)")
    return p_arr


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def gpd_var(xi, sigma, p):
    """Elementwise GPD VaR; the xi = 0 case is the exponential quantile."""
    return gpd_quantile(xi, sigma, p)


def gpd_cvar(xi, sigma, p):
    """Elementwise GPD CVaR, ``nan`` wherever ``xi >= 1``.

    Uses ``(VaR + sigma) / (1 - xi)``, algebraically the same closed form
    but continuous through xi = 0.
    """
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    v = np.asarray(gpd_quantile(xi, sigma, p))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = (v + sigma) / (1.0 - xi)
    return _out(np.where(xi < 1, c, np.nan))


def var_gpd(gpd: GpdParams, p) -> float:
    _check_p(p)
    return gpd_var(gpd.xi, gpd.sigma, p)


def cvar_gpd(gpd: GpdParams, p) -> float:
    _check_p(p)
    if gpd.xi >= 1:
        raise UndefinedMeasureError(f"GPD with xi={gpd.xi} >= 1 has no finite tail mean")
    return gpd_cvar(gpd.xi, gpd.sigma, p)


def risk_exponential(lam, p) -> RiskMeasures:
    p = _check_p(p)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be > 0")
    lq = np.log1p(-p)
    return RiskMeasures(_out(-lq / lam), _out((1.0 - lq) / lam))


def cvar_gamma(alpha, beta, p, var=None):
    """CVaR of Gamma(alpha, rate=beta) through the upper incomplete gamma function.

    ``var`` may be passed when the quantile is already known.
    """
    p = _check_p(p)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(alpha <= 0) or np.any(beta <= 0):
        raise ValueError("alpha and beta must be > 0")
    if var is None:
        var = gamma_quantile(alpha, beta, p)
    # Gamma(a+1, x) / (Gamma(a) beta) = (a / beta) Q(a+1, x)
    return _out(alpha / beta * np.asarray(regularized_gamma_q(alpha + 1.0, beta * np.asarray(var))) / (1.0 - p))


def risk_gamma(alpha, beta, p) -> RiskMeasures:
    v = gamma_quantile(alpha, beta, _check_p(p))
    return RiskMeasures(v, cvar_gamma(alpha, beta, p, var=v))


def risk_normal(mu, sigma, p) -> RiskMeasures:
    p = _check_p(p)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be > 0")
    z = special.ndtri(p)
    var = mu + sigma * z
    cvar = mu + sigma * np.exp(-0.5 * z * z) / ((1.0 - p) * math.sqrt(2.0 * math.pi))
    return RiskMeasures(_out(var), _out(cvar))


def var_cauchy(gamma, delta, p):
    """Cauchy VaR. There is no CVaR: the Cauchy mean does not exist."""
    p = _check_p(p)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("delta must be > 0")
    return _out(gamma + delta * np.tan(math.pi * (p - 0.5)))


def affine_transfer(a, b, risk_z: RiskMeasures) -> RiskMeasures:
    """Risk measures of ``a * Z + b`` from those of ``Z`` (``a > 0``)."""
    if not np.all(np.asarray(a) > 0):
        raise ValueError("scale a must be > 0")
    cvar = None if risk_z.cvar is None else _out(a * np.asarray(risk_z.cvar) + b)
    return RiskMeasures(_out(a * np.asarray(risk_z.var) + b), cvar)


def tail_probability(p, p_u):
    """Level inside the exceedance distribution matching level ``p`` of the baseline."""
    if not 0 < p_u < 1:
        raise ValueError("threshold probability p_u must lie in (0, 1)")
    if not p_u < p < 1:
        raise ValueError(f"risk level p={p} must exceed threshold probability p_u={p_u}")
    return 1 - (1 - p) / (1 - p_u)


def transfer_draws(u, p, p_u, xi, sigma):
    """Vectorized threshold transfer of GPD draws; CVaR is ``nan`` where xi >= 1."""
    p_t = tail_probability(p, p_u)
    return u + np.asarray(gpd_var(xi, sigma, p_t)), u + np.asarray(gpd_cvar(xi, sigma, p_t))


def threshold_transfer(u, p, p_u, gpd: GpdParams) -> RiskMeasures:
    """Baseline VaR/CVaR from the fitted exceedance GPD over threshold ``u``."""
    var, cvar = transfer_draws(u, p, p_u, gpd.xi, gpd.sigma)
    return RiskMeasures(float(var), None if gpd.xi >= 1 else float(cvar))


def exact_risk(model, p) -> RiskMeasures:
    """Closed-form measures of a known model; ``cvar`` is None where undefined."""
    if isinstance(model, GpdParams):
        return RiskMeasures(var_gpd(model, p), None if model.xi >= 1 else cvar_gpd(model, p))
    fam, prm = model.family, model.params
    if fam is Family.EXPONENTIAL:
        return risk_exponential(prm[0], p)
    if fam is Family.GAMMA:
        return risk_gamma(prm[0], prm[1], p)
    if fam is Family.NORMAL:
        return risk_normal(prm[0], prm[1], p)
    return RiskMeasures(var_cauchy(prm[0], prm[1], p))


def _scale(model):
    if isinstance(model, GpdParams):
        return model.sigma
    fam, prm = model.family, model.params
    if fam is Family.EXPONENTIAL:
        return 1.0 / prm[0]
    if fam is Family.GAMMA:
        return math.sqrt(prm[0]) / prm[1]
    return prm[1]


def cvar_numeric_oracle(model, p) -> float:
    """Tail mean ``1/(1-p) * int_{VaR_p}^inf x f(x) dx`` by adaptive quadrature.

    The infinite range is mapped to [0, 1) with ``x = VaR_p + s t / (1 - t)``.
    """
    p = float(_check_p(p))
    if isinstance(model, GpdParams):
        if model.xi >= 1:
            raise UndefinedMeasureError("GPD tail mean is infinite for xi >= 1")
    elif model.family is Family.CAUCHY:
        raise UndefinedMeasureError("Cauchy distribution has no finite mean")

    v = float(quantile(model, p))
    if isinstance(model, GpdParams) and model.xi < 0:
        val, _ = integrate.quad(lambda x: x * pdf(model, x), v, model.upper_endpoint,
                                epsabs=1e-10, epsrel=1e-12, limit=200)
        return val / (1.0 - p)

    s = _scale(model)

    def integrand(t):
        if t >= 1.0:
            return 0.0
        x = v + s * t / (1.0 - t)
        return x * pdf(model, x) * s / (1.0 - t) ** 2

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-12, limit=200)
    return val / (1.0 - p)

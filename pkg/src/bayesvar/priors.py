"""Informative priors for the exceedance GPD built from baseline parameters.

The coefficients below are fitted constants (simulation fits of the GPD
limit of each baseline's tail). Stable families use a standard-member
fit scaled by the estimated scale parameter; Gamma uses closed
relationships in (alpha, beta); the exponential tail is exact.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .distributions import Family

# p_u range over which the normal-family sigma fit is assumed meaningful
CALIBRATED_PU = (0.85, 0.99)

# b1, then (c1, c2, c3) of b2 = exp(c1 p_u^2 + c2 p_u + c3)
_STABLE_HYPER = {
    Family.NORMAL: (0.03, (-46.24, 83.55, -41.58)),
    Family.CAUCHY: (0.065, (323.57, -588.51, 266.13)),
}

# sd of priors the fitted relationships leave unspecified, relative to the mean
RELATIVE_SD = 0.1
MIN_SD = 1e-3


@dataclass(frozen=True)
class InformativePrior:
    """Normal prior ``N(mean, sd)`` on one GPD parameter.

    Fields may hold arrays when one prior per chain is needed.
    """

    mean: float
    sd: float

    def __post_init__(self):
        if not np.all(np.asarray(self.sd) > 0):
            raise ValueError("prior sd must be > 0")


@dataclass(frozen=True)
class StableTailCoefficients:
    xi_z: float
    sigma_z: float
    b1: float
    b2: float


def _default_sd(mean):
    return np.maximum(RELATIVE_SD * np.abs(mean), MIN_SD)


def _check_pu(p_u):
    if not 0 < p_u < 1:
        raise ValueError("p_u must lie in (0, 1)")
    lo, hi = CALIBRATED_PU
    if not lo <= p_u <= hi:
        warnings.warn(
            f"p_u={p_u} is outside the calibrated range [{lo}, {hi}] of the tail coefficients",
            stacklevel=3,
        )


def stable_tail_params(family, p_u) -> StableTailCoefficients:
    """GPD parameters of the standard Normal/Cauchy tail above the p_u-quantile."""
    family = Family.parse(family)
    if family not in _STABLE_HYPER:
        raise ValueError(f"no stable tail coefficients for family {family.value!r}")
    _check_pu(p_u)
    q = 1.0 - p_u
    if family is Family.NORMAL:
        xi_z = -0.7 + 0.61 * p_u
        sigma_z = 0.34 + 3.18 * q - 12.4 * q * q
    else:
        xi_z = 1.0
        sigma_z = 1.0 / (math.pi * q)
    if sigma_z <= 0:
        raise ValueError(f"tail scale fit is not positive at p_u={p_u}")
    b1, (c1, c2, c3) = _STABLE_HYPER[family]
    b2 = math.exp(c1 * p_u * p_u + c2 * p_u + c3)
    return StableTailCoefficients(xi_z, sigma_z, b1, b2)


def gamma_tail_params(alpha, beta):
    """Prior means ``(mu_xi, mu_sigma)`` of the GPD tail of Gamma(alpha, rate=beta)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(alpha <= 0) or np.any(beta <= 0):
        raise ValueError("alpha and beta must be > 0")
    mu_xi = -0.032 + 0.014 / alpha
    mu_sigma = 0.5 / beta * (1.0 + np.sqrt(alpha))
    if mu_xi.ndim == 0:
        return float(mu_xi), float(mu_sigma)
    return mu_xi, mu_sigma


def exponential_tail_prior(lam) -> InformativePrior:
    """Prior on the exceedance scale of an Exp(lam) baseline: the tail is Exp(lam) again."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be > 0")
    mean = 1.0 / lam
    sd = _default_sd(mean)
    if mean.ndim == 0:
        return InformativePrior(float(mean), float(sd))
    return InformativePrior(mean, sd)


def gamma_priors(alpha, beta):
    mu_xi, mu_sigma = gamma_tail_params(alpha, beta)
    return (
        InformativePrior(mu_xi, _default_sd(mu_xi)),
        InformativePrior(mu_sigma, _default_sd(mu_sigma)),
    )


def stable_priors(family, p_u, a_hat):
    """Priors on (xi, sigma) for a stable baseline with estimated scale ``a_hat``."""
    a_hat = np.asarray(a_hat, dtype=float)
    if np.any(a_hat <= 0):
        raise ValueError("scale estimate must be > 0")
    c = stable_tail_params(family, p_u)
    sigma_mean = a_hat * c.sigma_z
    if sigma_mean.ndim == 0:
        sigma_mean = float(sigma_mean)
    return InformativePrior(c.xi_z, c.b1), InformativePrior(sigma_mean, c.b2)

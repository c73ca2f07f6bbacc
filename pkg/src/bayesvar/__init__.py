"""Bayesian peaks-over-threshold estimation of VaR and CVaR."""

from .distributions import BaselineModel, Family, GpdParams, gamma_quantile, quantile, sample
from .estimators import Method, RiskEstimate, estimate, estimate_bmh, estimate_ipbmh, estimate_mh, extract_exceedances
from .exceptions import DataError, InsufficientTailDataError, SetupError, UndefinedMeasureError
from .harness import StudyGrid, historical_backtest, log_returns, read_prices, run_study
from .mcmc import ChainConfig
from .risk import RiskMeasures, cvar_numeric_oracle, exact_risk, threshold_transfer

__all__ = [
    "BaselineModel", "ChainConfig", "DataError", "Family", "GpdParams", "InsufficientTailDataError",
    "Method", "RiskEstimate", "RiskMeasures", "SetupError", "StudyGrid", "UndefinedMeasureError",
    "cvar_numeric_oracle", "estimate", "estimate_bmh", "estimate_ipbmh", "estimate_mh", "exact_risk",
    "extract_exceedances", "gamma_quantile", "historical_backtest", "log_returns", "quantile",
    "read_prices", "run_study", "sample", "threshold_transfer",
]

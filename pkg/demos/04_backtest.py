"""Expanding-window backtest on a synthetic price path with 1.5% daily volatility.

Each row dated d is estimated from the returns up to d. Values are
return quantiles (negative numbers: a 5% worst-day return).

Run:  python3 demos/04_backtest.py
"""

from bayesvar import ChainConfig, historical_backtest, log_returns
from bayesvar.harness import synthetic_prices, write_backtest
from bayesvar.risk import risk_normal

dates, prices = synthetic_prices(257, 0.015, seed=3)
series = log_returns(prices, dates)
rows = historical_backtest(series, p=0.95, p_u=0.9, warmup=100, cfg=ChainConfig(thin=10, seed=3))
write_backtest(rows, "backtest.csv")

print(f"{len(series.returns)} returns, first estimate after {100} of them\n")
print(f"{'date':<12}{'method':<10}{'VaR':>10}{'lo2.5':>10}{'hi97.5':>10}")
for r in rows:
    if r.measure == "var" and (r.date in dates[100:103] or r.date == dates[-1]):
        lo = "" if r.lo is None else f"{r.lo:.5f}"
        hi = "" if r.hi is None else f"{r.hi:.5f}"
        print(f"{r.date:<12}{r.method:<10}{r.estimate:>10.5f}{lo:>10}{hi:>10}")
print(f"\ngenerating model: 5% return quantile {-risk_normal(0.0, 0.015, 0.95).var:.5f}")
print("full table written to backtest.csv")

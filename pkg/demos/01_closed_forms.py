"""Exact VaR and CVaR for the four baseline families, and how the tail model reproduces them.

Run:  python3 demos/01_closed_forms.py
"""

from bayesvar import BaselineModel, GpdParams, cvar_numeric_oracle, exact_risk, quantile, threshold_transfer

P = 0.95

print(f"Exact risk measures at p = {P}\n")
print(f"{'model':<34}{'VaR':>12}{'CVaR':>12}{'CVaR by quadrature':>22}")
for model in (
    BaselineModel.exponential(1.0),
    BaselineModel.gamma(2.0, 1.0),
    BaselineModel.normal(0.0, 2.0),
    BaselineModel.cauchy(0.0, 2.0),
):
    r = exact_risk(model, P)
    if r.cvar is None:
        cvar, oracle = "undefined", "-"
    else:
        cvar, oracle = f"{r.cvar:.7g}", f"{cvar_numeric_oracle(model, P):.7g}"
    label = f"{model.family.value}{model.params}"
    print(f"{label:<34}{r.var:>12.7g}{cvar:>12}{oracle:>22}")

# Above its 0.9-quantile an Exp(2) variable is again Exp(2): a GPD with xi = 0,
# sigma = 1/2. Mapping the tail measures back through the threshold is exact.
lam, p_u = 2.0, 0.9
u = float(quantile(BaselineModel.exponential(lam), p_u))
via_tail = threshold_transfer(u, P, p_u, GpdParams(0.0, 1.0 / lam))
direct = exact_risk(BaselineModel.exponential(lam), P)
print(f"\nExp({lam}) through the tail above u = {u:.5f}:")
print(f"  VaR  {via_tail.var:.12f} (direct {direct.var:.12f})")
print(f"  CVaR {via_tail.cvar:.12f} (direct {direct.cvar:.12f})")

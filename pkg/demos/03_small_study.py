"""A reduced simulation study: Normal baselines, two sample sizes, 20 replications.

Writes the study table to study_normal.csv in the working directory and
prints a digest. The full grid is `bayesvar study --family normal`.

Run:  python3 demos/03_small_study.py
"""

from bayesvar import ChainConfig, StudyGrid, run_study
from bayesvar.harness import write_study

grid = StudyGrid("normal", params=((0.0, 1.0), (0.0, 2.0)), sizes=(32, 256), replications=20,
                 cfg=ChainConfig(thin=10, seed=1))
cells = run_study(grid)
write_study(cells, "study_normal.csv")

print(f"{'sigma':>5} {'n':>5} {'method':<6} {'measure':<5} {'mean':>10} {'true':>8} {'spread':>10} {'post.width':>11}")
for c in cells:
    print(f"{c.params[1]:>5g} {c.n:>5} {c.method.value:<6} {c.measure:<5} {c.mean:>10.4g} {c.true:>8.4g} "
          f"{c.width:>10.3g} {c.posterior_width:>11.3g}")
print("\nMH at n = 32 has about three exceedances: its flat shape prior lets VaR draws run off to huge values.")
print("table written to study_normal.csv")

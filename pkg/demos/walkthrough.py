"""Two-variable walkthrough: recover the weighting that best explains a suboptimal point.

The feasible region is x, y in [1, 5] cut by two covering rows.  The
observed point (2.7, 1.8) is feasible but not optimal for any weighting;
the gap-minimizing weighting is (0.28, 0.72) with gap 0.324.
"""
import numpy as np

from gapinv.gap_core import evaluate_gap
from gapinv.model_io import ForwardOracle, MilpModel, SubobjectiveMatrix
from gapinv.solvers import solve

m = MilpModel("walkthrough")
x = m.add_var("x", lb=1, ub=5)
y = m.add_var("y", lb=1, ub=5)
m.add_constraint({x: 1.7, y: 0.8}, ">=", 4.42)
m.add_constraint({x: 0.7, y: 1.8}, ">=", 4.32)
oracle = ForwardOracle(m, SubobjectiveMatrix(np.eye(2)))
y_hat = np.array([2.7, 1.8])

print("gap along the simplex:")
for a in np.linspace(0, 1, 6):
    alpha = np.array([a, 1 - a])
    print(f"  alpha = ({a:.1f}, {1 - a:.1f})  xi = {evaluate_gap(oracle, y_hat, alpha).xi:.4f}")

print("\nsolvers:")
for method in ("cp", "pgd", "pgd_accel", "fw"):
    res = solve(method, oracle, y_hat)
    print(f"  {method:9s} alpha* = {np.round(res.alpha_star, 4)}  xi* = {res.xi_star:.6f}  "
          f"iterations = {res.iterations}  ({res.terminated_by})")

res = solve("pgd_accel", oracle, y_hat)
print("\nPGD-A trace:")
for r in res.trace:
    print(f"  {r.iteration:2d} {r.kind:8s} alpha = {np.round(r.alpha, 4)}  xi = {r.xi:.4f}")

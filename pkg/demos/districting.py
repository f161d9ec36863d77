"""Inverse districting on a small synthetic state.

A plan is drawn as the optimum of a hidden weighting of population
imbalance, perimeter compactness and efficiency gap.  Inverse optimization
then asks which weighting makes the plan look best.
"""
import numpy as np

from gapinv.districting import PartitionOracle, enumerate_districtings, evaluate_metrics
from gapinv.graphs import generate_synthetic_state
from gapinv.solvers import solve

METRICS = ("rho", "sigma_P", "phi_EG")

g = generate_synthetic_state(12, seed=4)
print(f"state: {g.n} units, {len(g.edges)} adjacencies, population {g.population.sum():.0f}")
print(f"connected two-district plans: {len(enumerate_districtings(g, 2))}")

oracle = PartitionOracle(g, 2, METRICS)
hidden = np.array([0.6, 0.3, 0.1])
plan = oracle.solve(hidden)
print(f"\nplan optimal for hidden weights {hidden}: labels {plan.label.tolist()}")
for name, v in evaluate_metrics(g, plan.label).as_dict().items():
    print(f"  {name:20s} {v:.4f}")

# uneven noise on each metric, so the plan is close to optimal but not exactly
rng = np.random.default_rng(0)
y_hat = plan.sub_objective_image + rng.uniform(0.0375, 0.0625, size=3)
print(f"\nobserved metrics with noise: {np.round(y_hat, 4)}")
for method in ("cp", "pgd_accel", "fw"):
    res = solve(method, oracle, y_hat)
    w = ", ".join(f"{k}={v:.3f}" for k, v in zip(METRICS, res.alpha_star))
    print(f"  {method:9s} weights {w}  gap {res.xi_star:.4f}  FOP solves {res.fop_solves}")

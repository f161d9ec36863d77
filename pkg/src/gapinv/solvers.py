"""Inverse solution methods: cutting planes (absolute and relative loss),
projected gap-gradient descent with and without momentum, and Frank-Wolfe.

All methods share the same bookkeeping: one trace record per FOP solve
(the initial evaluation included), an incumbent with the lowest gap seen,
and a wall-clock / iteration budget.  The gap-gradient methods finish with
a master-problem solve that is verified by one more FOP solve.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gap_core import (
    Observation,
    Oracle,
    SolutionPool,
    eq_tolerance,
    image_of,
    master_abs,
    master_rel,
    project_simplex,
    subgradient,
)
from .model_io import ForwardSolution

METHODS = ("cp", "cp_rel", "pgd", "pgd_accel", "fw")
ALPHA_REPEAT_TOL = 1e-12


@dataclass
class SolverParams:
    initial_step_norm: float = 0.1
    momentum_beta: float = 0.5
    max_iterations: int = 10_000
    max_wall_seconds: float = 360.0
    eq_tolerance: float | None = None
    step_floor: float = 1e-12
    # run the master check after this many consecutive steps that find no new solution (0: never)
    stall_window: int = 5

    def __post_init__(self):
        if self.stall_window < 0:
            raise ValueError("stall_window must be nonnegative")
        if not self.initial_step_norm > 0:
            raise ValueError("initial_step_norm must be positive")
        if not 0.0 <= self.momentum_beta <= 1.0:
            raise ValueError("momentum_beta must lie in [0, 1]")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    kind: str  # init | step | master | verify
    alpha: np.ndarray
    xi: float
    pool_size: int
    step: float
    wall: float
    active_member: int | None = None


@dataclass
class SolverResult:
    alpha_star: np.ndarray
    xi_star: float
    iterations: int
    fop_solves: int
    wall_seconds: float
    terminated_by: str
    trace: list[TraceRecord] = field(default_factory=list)
    method: str = ""
    checkpoints: dict[int, np.ndarray] = field(default_factory=dict)


class _Run:
    """Shared bookkeeping for one solver run."""

    def __init__(self, oracle: Oracle, y_hat: Observation, params: SolverParams, method: str):
        self.oracle = oracle
        self.y_hat = y_hat
        self.c_hat = image_of(y_hat)
        self.k = self.c_hat.size
        self.params = params
        self.method = method
        self.t0 = time.perf_counter()
        self.trace: list[TraceRecord] = []
        self.calls = 0
        self.best_alpha: np.ndarray | None = None
        self.best_xi = math.inf
        self.scale = max(1.0, float(np.max(np.abs(self.c_hat))))

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def out_of_budget(self) -> bool:
        return (len(self.trace) >= max(1, self.params.max_iterations)
                or self.elapsed() >= self.params.max_wall_seconds)

    def tol(self, xi: float, sol: ForwardSolution | None = None) -> float:
        if self.params.eq_tolerance is not None:
            return self.params.eq_tolerance
        gap = sol.mip_gap if sol is not None else 0.0
        return eq_tolerance(xi, gap, self.scale)

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        self.calls += 1
        sol = self.oracle.solve(alpha)
        if sol.sub_objective_image.size != self.k:
            raise ValueError("oracle image dimension differs from the observation")
        return sol

    def record(self, kind: str, alpha: np.ndarray, xi: float, pool: SolutionPool | None,
               step: float, sol: ForwardSolution) -> None:
        member = sol.label if isinstance(sol.label, tuple) else None
        self.trace.append(TraceRecord(len(self.trace), kind, np.array(alpha, dtype=float), float(xi),
                                      len(pool) if pool is not None else 0, float(step),
                                      self.elapsed(), member[0] if member else None))
        if xi < self.best_xi:
            self.best_xi, self.best_alpha = float(xi), np.array(alpha, dtype=float)

    def finish(self, alpha: np.ndarray, xi: float, how: str) -> SolverResult:
        per_call = int(getattr(self.oracle, "solves_per_call", 1))
        return SolverResult(np.array(alpha, dtype=float), float(xi), len(self.trace),
                            self.calls * per_call, self.elapsed(), how, self.trace, self.method)

    def finish_budget(self) -> SolverResult:
        return self.finish(self.best_alpha, self.best_xi, "budget")


def _uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


# ---------------------------------------------------------------- cutting planes
def solve_cp_abs(oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    """Cutting-plane method alternating the absolute-gap master LP and the FOP."""
    params = params or SolverParams()
    run = _Run(oracle, y_hat, params, "cp")
    alpha = _uniform(run.k)
    sol = run.solve(alpha)
    xi = float(alpha @ subgradient(y_hat, sol))
    run.record("init", alpha, xi, None, 0.0, sol)
    if run.k == 1 or abs(xi) <= run.tol(xi, sol):
        return run.finish(alpha, xi, "mp_solve")
    best_alpha, best_xi = alpha, xi
    pool = SolutionPool(run.k)
    while True:
        if run.out_of_budget():
            return run.finish(best_alpha, best_xi, "budget")
        pool.add(sol)
        alpha = master_abs(y_hat, pool).alpha
        sol = run.solve(alpha)
        xi = float(alpha @ subgradient(y_hat, sol))
        run.record("master", alpha, xi, pool, 0.0, sol)
        tol = run.tol(xi, sol)
        if abs(xi - best_xi) <= tol:
            if np.max(np.abs(alpha - best_alpha)) <= 1e-9:
                return run.finish(best_alpha, best_xi, "mp_solve")
            best_alpha = alpha
        elif xi < best_xi:
            best_alpha, best_xi = alpha, xi
        if abs(xi) <= tol:
            return run.finish(alpha, xi, "mp_solve")


def solve_cp_rel(oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    """Cutting-plane method for the relative gap ``alpha^T C y_hat / min_y alpha^T C y``.

    ``xi_star`` is that ratio (1 means the observation is optimal for the
    returned weights).  Requires strictly positive images.
    """
    params = params or SolverParams()
    c_hat = image_of(y_hat)
    if np.any(c_hat <= 0):
        raise ValueError("relative gap requires a strictly positive observed image")
    run = _Run(oracle, y_hat, params, "cp_rel")

    def ratio(a: np.ndarray, s: ForwardSolution) -> float:
        img = s.sub_objective_image
        if np.any(img <= 0):
            raise ValueError("relative gap requires strictly positive FOP images")
        return float((a @ c_hat) / (a @ img))

    alpha = _uniform(run.k)
    sol = run.solve(alpha)
    r = ratio(alpha, sol)
    run.record("init", alpha, r, None, 0.0, sol)
    if run.k == 1 or abs(r - 1.0) <= run.tol(r, sol) / run.scale:
        return run.finish(alpha, r, "mp_solve")
    best_alpha, best_r = alpha, r
    pool = SolutionPool(run.k)
    while True:
        if run.out_of_budget():
            return run.finish(best_alpha, best_r, "budget")
        pool.add(sol)
        alpha = master_rel(y_hat, pool).alpha
        sol = run.solve(alpha)
        r = ratio(alpha, sol)
        run.record("master", alpha, r, pool, 0.0, sol)
        tol = run.tol(r, sol) / run.scale
        if abs(r - best_r) <= tol:
            if np.max(np.abs(alpha - best_alpha)) <= 1e-9:
                return run.finish(best_alpha, best_r, "mp_solve")
            best_alpha = alpha
        elif r < best_r:
            best_alpha, best_r = alpha, r
        if abs(r - 1.0) <= tol:
            return run.finish(alpha, r, "mp_solve")


# ------------------------------------------------------------ gap-gradient family
def _gap_gradient(oracle: Oracle, y_hat: Observation, params: SolverParams, method: str,
                  beta: float) -> SolverResult:
    run = _Run(oracle, y_hat, params, method)
    frank_wolfe = method == "fw"
    alpha = _uniform(run.k)
    sol = run.solve(alpha)
    g = subgradient(y_hat, sol)
    xi = float(alpha @ g)
    run.record("init", alpha, xi, None, 0.0, sol)
    if run.k == 1 or abs(xi) <= run.tol(xi, sol):
        return run.finish(alpha, xi, "mp_solve")

    t = 0.0
    if not frank_wolfe:
        tangent = g - g.mean()
        norm = float(np.linalg.norm(tangent))
        if norm <= 1e-15:
            # the subgradient is orthogonal to the simplex: alpha is stationary
            return run.finish(alpha, xi, "mp_solve")
        t = params.initial_step_norm / norm

    pool = SolutionPool(run.k)
    alpha_prev = alpha.copy()
    it = 0
    idle = 0
    while True:
        if run.out_of_budget():
            return run.finish_budget()
        it += 1
        pool.add(sol)
        if frank_wolfe:
            i = int(np.argmin(g))
            step = 2.0 / (2.0 + it)
            vertex = np.zeros(run.k)
            vertex[i] = 1.0
            new = (1.0 - step) * alpha + step * vertex
        else:
            step = t
            new = project_simplex(alpha - t * g + beta * (alpha - alpha_prev))
        expected = xi + float((new - alpha) @ g)
        new_sol = run.solve(new)
        new_g = subgradient(y_hat, new_sol)
        new_xi = float(new @ new_g)
        run.record("step", new, new_xi, pool, step, new_sol)
        alpha_prev, alpha = alpha, new
        tol = run.tol(new_xi, new_sol)
        if abs(new_xi) <= tol:
            return run.finish(alpha, new_xi, "mp_solve")

        known = pool.contains(new_sol)
        idle = idle + 1 if known else 0
        repeated = float(np.max(np.abs(alpha - alpha_prev))) <= ALPHA_REPEAT_TOL
        stalled = new_xi > expected + tol and known
        # Frank-Wolfe only approaches a vertex minimizer asymptotically along one facet
        idling = params.stall_window > 0 and idle >= params.stall_window
        floor_hit = not frank_wolfe and t < params.step_floor
        if not (repeated or stalled or idling or floor_hit):
            sol, g, xi = new_sol, new_g, new_xi
            continue

        pool.add(new_sol)
        if run.out_of_budget():
            return run.finish_budget()
        cand = master_abs(y_hat, pool)
        v_sol = run.solve(cand.alpha)
        v_g = subgradient(y_hat, v_sol)
        v_xi = float(cand.alpha @ v_g)
        grew = pool.add(v_sol)
        run.record("verify", cand.alpha, v_xi, pool, 0.0, v_sol)
        if abs(v_xi - cand.xi) <= run.tol(v_xi, v_sol):
            return run.finish(cand.alpha, v_xi, "mp_solve")
        if floor_hit or not grew:
            return run.finish_budget()
        idle = 0
        alpha = cand.alpha.copy()
        alpha_prev = alpha.copy()
        sol, g, xi = v_sol, v_g, v_xi
        if not frank_wolfe:
            t /= 2.0


def solve_pgd(oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    """Projected gap-gradient descent with master-problem termination."""
    return _gap_gradient(oracle, y_hat, params or SolverParams(), "pgd", 0.0)


def solve_pgd_accel(oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    """Projected gap-gradient descent with a heavy-ball momentum term."""
    params = params or SolverParams()
    return _gap_gradient(oracle, y_hat, params, "pgd_accel", params.momentum_beta)


def solve_fw(oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    """Frank-Wolfe over the simplex with step ``2/(2+k)``; no step halving."""
    return _gap_gradient(oracle, y_hat, params or SolverParams(), "fw", 0.0)


SOLVERS = {
    "cp": solve_cp_abs,
    "cp_rel": solve_cp_rel,
    "pgd": solve_pgd,
    "pgd_accel": solve_pgd_accel,
    "fw": solve_fw,
}


def solve(method: str, oracle: Oracle, y_hat: Observation, params: SolverParams | None = None) -> SolverResult:
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(SOLVERS)}") from None
    return fn(oracle, y_hat, params)


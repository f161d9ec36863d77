"""Inverse optimization over ensembles of coarsened graphs.

Every coarsening of a state has the same metric sub-objectives, so the
images of all members live in one space.  The multipoint gap at ``alpha``
is the observation's weighted objective minus the best member optimum; it
never exceeds the full-graph gap when the metrics survive coarsening
exactly (population balance, perimeter compactness, efficiency gap).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .districting import make_oracle
from .gap_core import Observation, Oracle, image_of, project_simplex, subgradient
from .graphs import PlanarStateGraph, coarsen, coarsening_ensemble, member_rng
from .model_io import ForwardSolution, OracleConfig
from .solvers import SolverParams, SolverResult, TraceRecord, solve


class MemberFailure(RuntimeError):
    def __init__(self, member: int, cause: Exception):
        super().__init__(f"ensemble member {member} failed: {cause}")
        self.member = member
        self.cause = cause


@dataclass
class EnsembleSpec:
    graph: PlanarStateGraph
    n: int
    L: int = 2
    metrics: tuple[str, ...] = ("rho", "sigma_A", "phi_EG")
    rounds: int = 1
    scheme: str = "random"
    seed: int = 0
    eta: float = 1.5
    boost_semantics: str = "prose"
    backend: str = "auto"
    oracle_cfg: OracleConfig | None = None
    _members: list[PlanarStateGraph] | None = field(default=None, repr=False)
    _oracles: list[Oracle] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ensemble needs at least one member")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        self.metrics = tuple(self.metrics)

    def members(self) -> list[PlanarStateGraph]:
        if self._members is None:
            kw = {"semantics": self.boost_semantics} if self.scheme == "boosted" else {}
            self._members = coarsening_ensemble(self.graph, self.n, self.rounds, self.scheme, self.seed,
                                                self.eta, **kw)
        return self._members

    def oracles(self) -> list[Oracle]:
        if self._oracles is None:
            self._oracles = [make_oracle(g, self.L, self.metrics, self.backend, self.oracle_cfg)
                             for g in self.members()]
        return self._oracles

    def subset(self, n: int) -> "EnsembleSpec":
        """The first ``n`` members (shares cached oracles; nested ensembles)."""
        if not 1 <= n <= self.n:
            raise ValueError("subset size out of range")
        sub = EnsembleSpec(self.graph, n, self.L, self.metrics, self.rounds, self.scheme, self.seed, self.eta,
                           self.boost_semantics, self.backend, self.oracle_cfg)
        sub._members = self.members()[:n]
        if self._oracles is not None:
            sub._oracles = self._oracles[:n]
        return sub


@dataclass(frozen=True)
class EnsembleGapEvaluation:
    xi_ens: float
    active_member: int
    minimizer: ForwardSolution
    subgrad: np.ndarray
    member_xi: np.ndarray


def multipoint_gap(oracles: Sequence[Oracle], y_hat: Observation, alpha: np.ndarray) -> EnsembleGapEvaluation:
    """Largest member gap at ``alpha`` and the matching subgradient.

    Ties between members go to the lowest index.
    """
    if not oracles:
        raise ValueError("need at least one member oracle")
    alpha = np.asarray(alpha, dtype=float)
    c_hat = image_of(y_hat)
    sols = []
    for i, o in enumerate(oracles):
        try:
            sols.append(o.solve(alpha))
        except Exception as exc:  # noqa: BLE001 - re-raised with member index
            raise MemberFailure(i, exc) from exc
    vals = np.array([alpha @ s.sub_objective_image for s in sols])
    best = int(np.flatnonzero(vals <= vals.min() + 1e-12 * max(1.0, abs(vals.min())))[0])
    # same rounding as evaluate_gap, so a one-member ensemble reproduces it exactly
    member_xi = np.array([alpha @ (c_hat - s.sub_objective_image) for s in sols])
    g = subgradient(y_hat, sols[best])
    return EnsembleGapEvaluation(float(alpha @ g), best, sols[best], g, member_xi)


class EnsembleOracle:
    """Presents an ensemble as a single oracle whose optimum is the best member optimum.

    With ``pool_all`` the non-winning member images ride along as
    companions so the master problem sees constraints from every member.
    """

    def __init__(self, oracles: Sequence[Oracle], pool_all: bool = True):
        if not oracles:
            raise ValueError("need at least one member oracle")
        self.oracles = list(oracles)
        self.pool_all = pool_all
        self.solves_per_call = len(self.oracles)
        self.active: list[int] = []

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        alpha = np.asarray(alpha, dtype=float)
        sols = []
        for i, o in enumerate(self.oracles):
            try:
                sols.append(o.solve(alpha))
            except Exception as exc:  # noqa: BLE001
                raise MemberFailure(i, exc) from exc
        vals = np.array([alpha @ s.sub_objective_image for s in sols])
        best = int(np.flatnonzero(vals <= vals.min() + 1e-12 * max(1.0, abs(vals.min())))[0])
        self.active.append(best)
        win = sols[best]
        extras = tuple(s.sub_objective_image for i, s in enumerate(sols) if i != best) if self.pool_all else ()
        return ForwardSolution(win.sub_objective_image, assignment=win.assignment, proven_optimal=all(
            s.proven_optimal for s in sols), mip_gap=max(s.mip_gap for s in sols), objective=float(vals[best]),
            label=(best, win.label), companions=extras)


def solve_multipoint(spec: EnsembleSpec | Sequence[Oracle], y_hat: Observation, method: str = "pgd_accel",
                     params: SolverParams | None = None) -> SolverResult:
    """Minimise the multipoint (min-max) gap with any of the inverse solvers."""
    oracles = spec.oracles() if isinstance(spec, EnsembleSpec) else list(spec)
    return solve(method, EnsembleOracle(oracles), y_hat, params)


def solve_independent(spec: EnsembleSpec | Sequence[Oracle], y_hat: Observation, method: str = "pgd_accel",
                      params: SolverParams | None = None
                      ) -> tuple[np.ndarray, list[np.ndarray], dict[int, Exception]]:
    """Solve each member on its own and average the weightings.

    Returns the mean, the per-member weightings (successful members only)
    and a ``{member: error}`` map for failures.
    """
    oracles = spec.oracles() if isinstance(spec, EnsembleSpec) else list(spec)
    outs: list[np.ndarray] = []
    errors: dict[int, Exception] = {}
    for i, o in enumerate(oracles):
        try:
            outs.append(solve(method, o, y_hat, params).alpha_star)
        except Exception as exc:  # noqa: BLE001 - reported per member
            errors[i] = exc
    if not outs:
        raise RuntimeError(f"all {len(oracles)} members failed")
    mean = np.mean(outs, axis=0)
    return mean / mean.sum(), outs, errors


def default_checkpoints(K: int) -> list[int]:
    return sorted({0, math.ceil(K / 3), math.ceil(2 * K / 3), K})


def averaging_weights(m: int) -> np.ndarray:
    """Weights proportional to ``(i+1)^2`` for iterates ``0..m``."""
    w = (np.arange(m + 1) + 1.0) ** 2
    return w / w.sum()


def solve_stochastic(graph: PlanarStateGraph, L: int, metrics: Sequence[str], y_hat: Observation,
                     n_rule: int | str = "increasing", K: int = 12, params: SolverParams | None = None,
                     seed: int = 0, rounds: int = 1, scheme: str = "random", momentum: float = 0.1,
                     checkpoints: Sequence[int] | None = None, backend: str = "auto",
                     oracle_factory: Callable[[PlanarStateGraph], Oracle] | None = None) -> SolverResult:
    """Projected subgradient descent with subgradients from freshly sampled ensembles.

    ``n_rule`` is a fixed ensemble size or ``'increasing'`` (size ``k`` at
    iteration ``k``).  Steps shrink like ``1/sqrt(k)`` from a first step of
    Euclidean length ``params.initial_step_norm``.  The returned weighting
    is the ``(i+1)^2``-weighted average of the iterates; the same average
    truncated at each checkpoint is stored in ``result.checkpoints``.
    """
    params = params or SolverParams()
    metrics = tuple(metrics)
    k_dim = len(metrics)
    if K < 0:
        raise ValueError("K must be nonnegative")
    if isinstance(n_rule, str) and n_rule != "increasing":
        raise ValueError("n_rule must be a positive integer or 'increasing'")
    if not isinstance(n_rule, str) and n_rule < 1:
        raise ValueError("fixed ensemble size must be positive")
    make = oracle_factory or (lambda g: make_oracle(g, L, metrics, backend))
    t0 = time.perf_counter()
    alpha = np.full(k_dim, 1.0 / k_dim)
    prev = alpha.copy()
    iterates = [alpha.copy()]
    trace: list[TraceRecord] = []
    t1: float | None = None
    solves = 0
    status = "completed"
    last_oracles: list[Oracle] = []
    for it in range(1, K + 1):
        if time.perf_counter() - t0 >= params.max_wall_seconds:
            status = "budget"
            break
        n = it if n_rule == "increasing" else int(n_rule)
        members = [coarsen(graph, rounds, scheme, member_rng(seed, i, it)) for i in range(n)]
        last_oracles = [make(g) for g in members]
        ev = multipoint_gap(last_oracles, y_hat, alpha)
        solves += n
        trace.append(TraceRecord(len(trace), "step", alpha.copy(), ev.xi_ens, n, 0.0,
                                 time.perf_counter() - t0, ev.active_member))
        g = ev.subgrad
        if t1 is None:
            norm = float(np.linalg.norm(g - g.mean()))
            if norm <= 1e-15:
                iterates.append(alpha.copy())
                prev = alpha.copy()
                continue
            t1 = params.initial_step_norm / norm
        step = t1 / math.sqrt(it)
        new = project_simplex(alpha - step * g + momentum * (alpha - prev))
        prev, alpha = alpha, new
        iterates.append(alpha.copy())
    done = len(iterates) - 1
    hist = np.array(iterates)
    cps = default_checkpoints(K) if checkpoints is None else sorted(set(checkpoints))
    averaged = {c: averaging_weights(min(c, done)) @ hist[:min(c, done) + 1] for c in cps}
    final = averaging_weights(done) @ hist
    xi = math.nan
    if last_oracles:
        xi = multipoint_gap(last_oracles, y_hat, final).xi_ens
        solves += len(last_oracles)
    res = SolverResult(final, xi, len(trace), solves, time.perf_counter() - t0, status, trace, "stochastic")
    res.checkpoints = averaged
    return res

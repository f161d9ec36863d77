"""Gap-function evaluation, simplex projection and the finite-pool master LPs.

Everything here works in image space: a feasible solution ``y`` enters only
through its sub-objective image ``C y``, and the observation ``y_hat`` may be
given either as a :class:`ForwardSolution` or directly as an image vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Protocol, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .model_io import ForwardSolution

DEDUP_TOL = 1e-9


class Oracle(Protocol):
    def solve(self, alpha: np.ndarray) -> ForwardSolution: ...


Observation = Union[ForwardSolution, np.ndarray, Sequence[float]]


def image_of(y: Observation) -> np.ndarray:
    if isinstance(y, ForwardSolution):
        return y.sub_objective_image
    return np.asarray(y, dtype=float).ravel()


def check_cost_vector(alpha: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    a = np.asarray(alpha, dtype=float).ravel()
    if a.size == 0 or not np.all(np.isfinite(a)):
        raise ValueError("cost vector must be finite and nonempty")
    if np.any(a < -tol) or abs(a.sum() - 1.0) > tol:
        raise ValueError(f"cost vector {a} is not on the unit simplex")
    return a


@dataclass(frozen=True)
class GapEvaluation:
    xi: float
    minimizer: ForwardSolution
    subgrad: np.ndarray
    alpha: np.ndarray


@dataclass(frozen=True)
class MasterResult:
    alpha: np.ndarray
    xi: float


def subgradient(y_hat: Observation, y: Observation) -> np.ndarray:
    """``C y_hat - C y``, a subgradient of the gap function where ``y`` is optimal."""
    a, b = image_of(y_hat), image_of(y)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a - b


def evaluate_gap(oracle: Oracle, y_hat: Observation, alpha: np.ndarray) -> GapEvaluation:
    """Solve the FOP at ``alpha`` and return the absolute gap and its subgradient."""
    alpha = np.asarray(alpha, dtype=float)
    sol = oracle.solve(alpha)
    g = subgradient(y_hat, sol)
    return GapEvaluation(float(alpha @ g), sol, g, alpha.copy())


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


class SolutionPool:
    """Ordered FOP solutions, deduplicated by image (max-norm ``DEDUP_TOL``)."""

    def __init__(self, k: int | None = None):
        self.k = k
        self.solutions: list[ForwardSolution] = []
        self._images: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self) -> Iterator[ForwardSolution]:
        return iter(self.solutions)

    @property
    def images(self) -> np.ndarray:
        if not self._images:
            return np.zeros((0, self.k or 0))
        return np.vstack(self._images)

    def contains(self, y: Observation, tol: float = DEDUP_TOL) -> bool:
        img = image_of(y)
        return any(np.max(np.abs(img - b)) <= tol for b in self._images)

    def add(self, y: Observation) -> bool:
        """Insert ``y`` (and any companion images); True if the pool grew."""
        sol = y if isinstance(y, ForwardSolution) else ForwardSolution.from_image(y)
        grew = self._add_one(sol)
        for extra in sol.companions:
            grew |= self._add_one(ForwardSolution.from_image(extra))
        return grew

    def _add_one(self, sol: ForwardSolution) -> bool:
        img = sol.sub_objective_image
        if self.k is None:
            self.k = img.size
        elif img.size != self.k:
            raise ValueError(f"image of length {img.size} in a pool of dimension {self.k}")
        if self.contains(img):
            return False
        self.solutions.append(sol)
        self._images.append(img)
        return True


def _clean_simplex(a: np.ndarray) -> np.ndarray:
    a = np.maximum(np.asarray(a, dtype=float), 0.0)
    return a / a.sum()


def master_abs(y_hat: Observation, pool: SolutionPool | np.ndarray) -> MasterResult:
    """LP: min xi over the simplex s.t. ``alpha^T (C y_hat - C y) <= xi`` for pooled y.

    ``xi`` is free in sign.  The returned value is recomputed from the
    cleaned ``alpha`` so it equals the pool's maximum violation exactly.
    """
    c_hat = image_of(y_hat)
    B = pool.images if isinstance(pool, SolutionPool) else np.atleast_2d(np.asarray(pool, dtype=float))
    if B.shape[0] == 0:
        raise ValueError("master problem needs a nonempty pool")
    k = c_hat.size
    if B.shape[1] != k:
        raise ValueError("pool images and observation differ in dimension")
    D = c_hat[None, :] - B
    if k == 1:
        alpha = np.ones(1)
        return MasterResult(alpha, float(np.max(D @ alpha)))
    # variables: alpha_1..alpha_k, xi
    c = np.zeros(k + 1)
    c[-1] = 1.0
    A_ub = np.hstack([D, -np.ones((D.shape[0], 1))])
    b_ub = np.zeros(D.shape[0])
    A_eq = np.zeros((1, k + 1))
    A_eq[0, :k] = 1.0
    bounds = [(0, None)] * k + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"master LP failed: {res.message}")
    alpha = _clean_simplex(res.x[:k])
    return MasterResult(alpha, float(np.max(D @ alpha)))


def master_rel(y_hat: Observation, pool: SolutionPool | np.ndarray) -> MasterResult:
    """Relative-gap master: min ``a^T C y_hat`` s.t. ``a^T C y >= 1``, ``a >= 0``.

    Returns the normalized weights ``a / ||a||_1`` and the ratio
    ``a^T C y_hat``, which is the optimal worst-case ratio of observed to
    optimal objective over the pool.
    """
    c_hat = image_of(y_hat)
    B = pool.images if isinstance(pool, SolutionPool) else np.atleast_2d(np.asarray(pool, dtype=float))
    if B.shape[0] == 0:
        raise ValueError("master problem needs a nonempty pool")
    if np.any(c_hat <= 0) or np.any(B <= 0):
        raise ValueError("relative gap requires strictly positive images")
    k = c_hat.size
    # the ratio is scale free; normalizing first lets scaled inputs hit the same LP vertex
    s = float(c_hat.max())
    res = linprog(c_hat / s, A_ub=-B / s, b_ub=-np.ones(B.shape[0]), bounds=[(0, None)] * k, method="highs")
    if res.status != 0:
        raise RuntimeError(f"relative master LP failed unexpectedly: {res.message}")
    a = np.maximum(res.x, 0.0)
    scale = a.sum()
    if scale <= 0:
        raise RuntimeError("relative master returned the zero vector")
    alpha = a / scale
    # ratio recomputed from the normalized weights: max over pool of alpha.c_hat / alpha.c_y
    xi = float((alpha @ c_hat) / np.min(B @ alpha))
    return MasterResult(alpha, xi)


def relative_gap(alpha: np.ndarray, y_hat: Observation, y: Observation) -> float:
    return float((alpha @ image_of(y_hat)) / (alpha @ image_of(y)))


def eq_tolerance(xi: float, mip_gap: float = 0.0, scale: float = 1.0) -> float:
    """Tolerance for the equality tests of the termination logic."""
    return max(1e-6 * max(1.0, scale), 10.0 * mip_gap * abs(xi))


def mp_solve_verify(oracle: Oracle, y_hat: Observation, candidate: MasterResult,
                    pool: SolutionPool | None = None, tol: float | None = None
                    ) -> tuple[bool, GapEvaluation]:
    """Re-solve the FOP at the master's weights and compare gaps.

    The fresh solution is added to ``pool`` whatever the outcome.
    """
    ev = evaluate_gap(oracle, y_hat, candidate.alpha)
    if pool is not None:
        pool.add(ev.minimizer)
    if tol is None:
        tol = eq_tolerance(ev.xi, ev.minimizer.mip_gap)
    return abs(ev.xi - candidate.xi) <= tol, ev

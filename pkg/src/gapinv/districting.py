"""Political-districting forward problem: MILP construction, direct metric
evaluation and an exact enumeration oracle for small graphs.

Metric names used throughout:

``rho``
    largest relative deviation of a district population from ``total / L``.
``sigma_A``
    area-weighted p-median cost of the districts (each centred at its own
    1-median) divided by the state's 1-median cost.
``sigma_P``
    sum of district perimeters divided by ``L`` times the state perimeter.
``phi_EG``
    absolute efficiency gap, ``|sum_i w_i| / total votes`` with ``w_i`` the
    Democratic minus Republican wasted votes of district ``i``.
``phi_EG_directional``
    ``-sum_i w_i / total votes``; positive when the plan favours Democrats.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np

from .graphs import PlanarStateGraph
from .model_io import EnumeratedOracle, ForwardOracle, ForwardSolution, MilpModel, OracleConfig, \
    SubobjectiveMatrix, VarKind

METRICS = ("rho", "sigma_A", "sigma_P", "phi_EG", "phi_EG_directional")
FRACTIONAL_TOL = 1e-6


class DistrictingError(ValueError):
    pass


@dataclass(frozen=True)
class Districting:
    labels: np.ndarray
    centers: tuple[int, ...] = ()

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=int).ravel()
        object.__setattr__(self, "labels", lab)
        if lab.size == 0 or lab.min() != 0:
            raise DistrictingError("labels must start at 0")
        if set(np.unique(lab)) != set(range(lab.max() + 1)):
            raise DistrictingError("labels must be contiguous and every district nonempty")

    @property
    def L(self) -> int:
        return int(self.labels.max()) + 1

    def districts(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == l) for l in range(self.L)]


@dataclass(frozen=True)
class MetricVector:
    rho: float
    sigma_A: float
    sigma_P: float
    phi_EG: float
    phi_EG_directional: float

    def select(self, metrics: Sequence[str]) -> np.ndarray:
        return np.array([getattr(self, m) for m in metrics], dtype=float)

    def as_dict(self) -> dict[str, float]:
        return {m: float(getattr(self, m)) for m in METRICS}


def check_metrics(metrics: Sequence[str]) -> tuple[str, ...]:
    metrics = tuple(metrics)
    if not metrics:
        raise DistrictingError("select at least one metric")
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise DistrictingError(f"unknown metrics {bad}; choose from {METRICS}")
    if len(set(metrics)) != len(metrics):
        raise DistrictingError("metrics must be distinct")
    if "phi_EG" in metrics and "phi_EG_directional" in metrics:
        raise DistrictingError("phi_EG and phi_EG_directional are linearly dependent; pick one")
    return metrics


# ------------------------------------------------------------------ evaluation
def wasted_vote_balance(dem: np.ndarray, rep: np.ndarray) -> np.ndarray:
    """Per-district Democratic minus Republican wasted votes (ties go to Republicans)."""
    dem, rep = np.asarray(dem, dtype=float), np.asarray(rep, dtype=float)
    dem_win = dem - rep > 0
    return np.where(dem_win, (dem - 3 * rep) / 2, (3 * dem - rep) / 2)


def evaluate_metrics(graph: PlanarStateGraph, districting: Districting | Sequence[int],
                     check_contiguity: bool = True) -> MetricVector:
    d = districting if isinstance(districting, Districting) else Districting(np.asarray(districting))
    if d.labels.size != graph.n:
        raise DistrictingError(f"districting covers {d.labels.size} vertices, graph has {graph.n}")
    L = d.L
    parts = d.districts()
    if check_contiguity:
        for l, members in enumerate(parts):
            if len(members) > 1 and not nx.is_connected(graph.nx.subgraph(members.tolist())):
                raise DistrictingError(f"district {l} is not connected")
    pbar = graph.total_population / L
    pops = np.array([graph.population[p].sum() for p in parts])
    rho = float(np.max(np.abs(pops - pbar)) / pbar) if pbar > 0 else 0.0

    W = graph.distances * graph.area[None, :]
    cost = sum(float(np.min(W[np.ix_(p, p)].sum(axis=1))) for p in parts)
    M = graph.median_constant
    sigma_A = cost / M if M > 0 else 0.0

    lab = d.labels
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    cut = float(graph.border[lab[u] != lab[v]].sum())
    Mp = graph.state_perimeter
    sigma_P = (2 * cut + Mp) / (L * Mp) if Mp > 0 else math.nan

    dem = np.array([graph.dem[p].sum() for p in parts])
    rep = np.array([graph.rep[p].sum() for p in parts])
    total_votes = float(graph.dem.sum() + graph.rep.sum())
    net = float(wasted_vote_balance(dem, rep).sum())
    directional = -net / total_votes if total_votes > 0 else 0.0
    return MetricVector(rho, sigma_A, sigma_P, abs(directional), directional)


# ------------------------------------------------------------------------ MILP
@dataclass
class DistrictingModel:
    graph: PlanarStateGraph
    L: int
    metrics: tuple[str, ...]
    model: MilpModel
    C: SubobjectiveMatrix
    x: np.ndarray
    flow: dict[tuple[int, int, int], int]
    z: np.ndarray
    v: np.ndarray
    w: np.ndarray
    rho: int
    sigma_A: int
    phi_EG: int
    phi_EG_directional: int | None = None
    sigma_P: int | None = None
    q: dict[tuple[int, int], int] = field(default_factory=dict)

    def metric_index(self, name: str) -> int:
        idx = getattr(self, name)
        if idx is None:
            raise KeyError(f"metric {name} is not part of this model")
        return idx


def build_fop(graph: PlanarStateGraph, L: int, metrics: Sequence[str] = ("rho", "sigma_A", "phi_EG")
              ) -> DistrictingModel:
    """Districting MILP with one center per district and flow-based contiguity.

    Every vertex ``j`` is assigned to a center ``i`` (``x[i, j] = 1``); a
    separate single-commodity flow per center ships one unit to each
    assigned vertex along edges inside the district.  The metric variables
    are tied to ``x`` by the defining rows described in the module
    docstring; ``sub_objective`` rows are unit vectors on them.
    """
    metrics = check_metrics(metrics)
    n = graph.n
    if L < 1 or L > n:
        raise DistrictingError(f"need 1 <= L <= |V|, got L={L}, |V|={n}")
    if n > 1 and not nx.is_connected(graph.nx):
        raise DistrictingError("graph is not connected")
    m = MilpModel(f"districting_n{n}_L{L}")
    B, C_ = VarKind.BINARY, VarKind.CONTINUOUS
    x = np.array([[m.add_var(f"x_{i}_{j}", B) for j in range(n)] for i in range(n)])
    nb = graph.neighbors
    flow: dict[tuple[int, int, int], int] = {}
    for i in range(n):
        for a in range(n):
            for b in nb[a]:
                flow[i, a, b] = m.add_var(f"f_{i}_{a}_{b}", C_, 0.0)
    z = np.array([m.add_var(f"zD_{i}", B) for i in range(n)])
    v = np.array([[m.add_var(f"vD_{i}_{j}", B) for j in range(n)] for i in range(n)])
    w = np.array([m.add_var(f"w_{i}", C_, -math.inf, math.inf) for i in range(n)])
    rho = m.add_var("rho", C_, 0.0)
    sigma_A = m.add_var("sigma_A", C_, 0.0)
    phi = m.add_var("phi_EG", C_, 0.0)
    phi_dir = m.add_var("phi_EG_directional", C_, -math.inf, math.inf) if "phi_EG_directional" in metrics else None

    m.add_constraint({x[i, i]: 1.0 for i in range(n)}, "==", L, "centers")
    for j in range(n):
        m.add_constraint({x[i, j]: 1.0 for i in range(n)}, "==", 1.0, f"assign_{j}")
    for i in range(n):
        for j in range(n):
            if i != j:
                m.add_constraint({x[i, j]: 1.0, x[i, i]: -1.0}, "<=", 0.0, f"open_{i}_{j}")
    for i in range(n):
        for j in range(n):
            row: dict[int, float] = {}
            for u in nb[j]:
                row[flow[i, j, u]] = row.get(flow[i, j, u], 0.0) + 1.0
                row[flow[i, u, j]] = row.get(flow[i, u, j], 0.0) - 1.0
            if i != j:
                row[x[i, j]] = 1.0
                m.add_constraint(row, "==", 0.0, f"flow_{i}_{j}")
            else:
                # the center supplies one unit per other vertex of its district
                for jj in range(n):
                    if jj != i:
                        row[x[i, jj]] = row.get(x[i, jj], 0.0) - 1.0
                m.add_constraint(row, "==", 0.0, f"source_{i}")
    for i in range(n):
        for j in range(n):
            row = {x[i, j]: float(n)}
            for u in nb[j]:
                row[flow[i, u, j]] = -1.0
            m.add_constraint(row, ">=", 0.0, f"cap_{i}_{j}")

    pbar = graph.total_population / L
    p = graph.population
    for i in range(n):
        lo = {x[i, j]: -p[j] for j in range(n)}
        lo[x[i, i]] = lo[x[i, i]] + pbar
        lo[rho] = -pbar
        m.add_constraint(lo, "<=", 0.0, f"rho_lo_{i}")
        hi = {x[i, j]: -p[j] for j in range(n)}
        hi[x[i, i]] = hi[x[i, i]] + pbar
        hi[rho] = pbar
        m.add_constraint(hi, ">=", 0.0, f"rho_hi_{i}")

    M = graph.median_constant if graph.median_constant > 0 else 1.0
    da = graph.distances * graph.area[None, :] / M
    row = {sigma_A: 1.0}
    for i in range(n):
        for j in range(n):
            if da[i, j] != 0.0:
                row[x[i, j]] = -da[i, j]
    m.add_constraint(row, "==", 0.0, "sigma_A_def")

    margin = graph.dem - graph.rep
    votes = graph.dem + graph.rep
    total_votes = float(votes.sum())
    big = max(total_votes, 1.0)
    integral = np.allclose(margin, np.round(margin))
    delta = 0.5 if integral else 1e-6 * big
    for i in range(n):
        row = {x[i, j]: margin[j] for j in range(n) if margin[j] != 0}
        m.add_constraint({**row, z[i]: -big}, "<=", 0.0, f"win_ub_{i}")
        m.add_constraint({**row, z[i]: -(big + delta)}, ">=", -big, f"win_lb_{i}")
        for j in range(n):
            m.add_constraint({v[i, j]: 1.0, x[i, j]: -1.0}, "<=", 0.0, f"v_x_{i}_{j}")
            m.add_constraint({v[i, j]: 1.0, z[i]: -1.0}, "<=", 0.0, f"v_z_{i}_{j}")
            m.add_constraint({v[i, j]: 1.0, x[i, j]: -1.0, z[i]: -1.0}, ">=", -1.0, f"v_and_{i}_{j}")
        row = {x[i, j]: (3 * graph.dem[j] - graph.rep[j]) / 2 for j in range(n)}
        for j in range(n):
            row[v[i, j]] = -votes[j]
        row[w[i]] = -1.0
        m.add_constraint(row, "==", 0.0, f"wasted_{i}")
    tv = total_votes if total_votes > 0 else 1.0
    m.add_constraint({phi: 1.0, **{w[i]: -1.0 / tv for i in range(n)}}, ">=", 0.0, "phi_pos")
    m.add_constraint({phi: 1.0, **{w[i]: 1.0 / tv for i in range(n)}}, ">=", 0.0, "phi_neg")
    if phi_dir is not None:
        m.add_constraint({phi_dir: 1.0, **{w[i]: 1.0 / tv for i in range(n)}}, "==", 0.0, "phi_dir_def")

    sigma_P = None
    q: dict[tuple[int, int], int] = {}
    if "sigma_P" in metrics:
        Mp = graph.state_perimeter
        if not Mp > 0:
            raise DistrictingError("sigma_P needs a positive state perimeter")
        sigma_P = m.add_var("sigma_P", C_, 0.0)
        Bm = graph.border_matrix
        for a, b in graph.edges:
            for s, t in ((a, b), (b, a)):
                if Bm[s, t] != 0:
                    q[s, t] = m.add_var(f"q_{s}_{t}", B)
        for (s, t), qi in q.items():
            for k in range(n):
                m.add_constraint({qi: 1.0, x[k, s]: -1.0, x[k, t]: 1.0}, ">=", 0.0, f"cut_{s}_{t}_{k}")
        row = {sigma_P: 1.0}
        for (s, t), qi in q.items():
            row[qi] = -Bm[s, t] / (L * Mp)
        m.add_constraint(row, "==", 1.0 / L, "sigma_P_def")

    handles = {"rho": rho, "sigma_A": sigma_A, "sigma_P": sigma_P, "phi_EG": phi,
               "phi_EG_directional": phi_dir}
    C = SubobjectiveMatrix.unit_rows([handles[k] for k in metrics], m.n_vars, metrics)
    return DistrictingModel(graph, L, metrics, m, C, x, flow, z, v, w, rho, sigma_A, phi, phi_dir, sigma_P, q)


def decode_districting(dm: DistrictingModel, sol: ForwardSolution | np.ndarray) -> Districting:
    """Read the assignment variables of a MILP solution."""
    y = sol.assignment if isinstance(sol, ForwardSolution) else np.asarray(sol, dtype=float)
    if y is None:
        raise DistrictingError("solution carries no assignment")
    X = y[dm.x]
    if np.any(np.abs(X - np.round(X)) > FRACTIONAL_TOL):
        raise DistrictingError("fractional assignment variables")
    X = np.round(X).astype(int)
    centers = np.flatnonzero(np.diag(X) == 1)
    owner = X.argmax(axis=0)
    if np.any(X.sum(axis=0) != 1) or not set(owner) <= set(centers):
        raise DistrictingError("assignment variables do not describe a districting")
    relabel = {c: l for l, c in enumerate(centers)}
    return Districting(np.array([relabel[o] for o in owner]), tuple(int(c) for c in centers))


class DistrictingOracle(ForwardOracle):
    """MILP oracle whose returned image is the direct metric evaluation.

    Metric variables that carry zero weight are only bounded from one side
    in the MILP and can come back overstated; replacing them by their exact
    values keeps the solution optimal and makes images comparable across
    weightings.
    """

    def __init__(self, dm: DistrictingModel, cfg: OracleConfig | None = None):
        super().__init__(dm.model, dm.C, cfg)
        self.dm = dm
        self._cols = [dm.metric_index(k) for k in dm.metrics]

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        raw = super().solve(alpha)
        d = decode_districting(self.dm, raw)
        vec = evaluate_metrics(self.dm.graph, d, check_contiguity=True).select(self.dm.metrics)
        x = raw.assignment.copy()
        x[self._cols] = vec
        alpha = np.asarray(alpha, dtype=float)
        return ForwardSolution(vec, assignment=x, proven_optimal=raw.proven_optimal, mip_gap=raw.mip_gap,
                               objective=float(alpha @ vec), label=d.labels.copy())


# ---------------------------------------------------------------- enumeration
def _bits_of(mask: int) -> list[int]:
    out, b = [], 0
    while mask:
        if mask & 1:
            out.append(b)
        mask >>= 1
        b += 1
    return out


def connected_masks(masks: np.ndarray, nbmask: np.ndarray) -> np.ndarray:
    """Vectorised test that each bitmask induces a nonempty connected subgraph."""
    masks = np.asarray(masks, dtype=np.int64)
    reach = masks & -masks
    n = len(nbmask)
    active = np.ones(masks.shape, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        r = reach[idx]
        grown = r.copy()
        for v in range(n):
            hit = ((r >> v) & 1).astype(bool)
            if hit.any():
                grown[hit] |= nbmask[v]
        grown &= masks[idx]
        changed = grown != r
        reach[idx] = grown
        active[idx[~changed]] = False
    return (reach == masks) & (masks != 0)


def _submasks_with(root: int, rest_bits: list[int]) -> np.ndarray:
    r = len(rest_bits)
    idx = np.arange(1 << r, dtype=np.int64)
    out = np.full(idx.shape, 1 << root, dtype=np.int64)
    for t, b in enumerate(rest_bits):
        out |= ((idx >> t) & 1) << b
    return out


def enumerate_districtings(graph: PlanarStateGraph, L: int, max_vertices: int = 24) -> np.ndarray:
    """All partitions of the graph into ``L`` connected districts.

    Returns an ``(N, |V|)`` label array; district 0 contains vertex 0 and
    labels follow the order of each district's smallest vertex.
    """
    n = graph.n
    if n > max_vertices:
        raise DistrictingError(f"enumeration limited to {max_vertices} vertices")
    if not 1 <= L <= n:
        raise DistrictingError("need 1 <= L <= |V|")
    nbmask = np.zeros(n, dtype=np.int64)
    for u, v in graph.edges:
        nbmask[u] |= 1 << int(v)
        nbmask[v] |= 1 << int(u)
    full = (1 << n) - 1

    def rec(R: int, parts: int) -> list[np.ndarray]:
        """Rows of district masks (shape (N, parts)) partitioning R."""
        if parts == 1:
            ok = connected_masks(np.array([R], dtype=np.int64), nbmask)[0]
            return [np.array([[R]], dtype=np.int64)] if ok else []
        bits = _bits_of(R)
        cand = _submasks_with(bits[0], bits[1:])
        cand = cand[cand != R]
        cand = cand[connected_masks(cand, nbmask)]
        if parts == 2:
            rest = R ^ cand
            keep = connected_masks(rest, nbmask)
            return [np.column_stack([cand[keep], rest[keep]])] if keep.any() else []
        out = []
        for S in cand:
            for tail in rec(R ^ int(S), parts - 1):
                out.append(np.column_stack([np.full(len(tail), S, dtype=np.int64), tail]))
        return out

    blocks = rec(full, L)
    if not blocks:
        return np.zeros((0, n), dtype=np.int8)
    masks = np.vstack(blocks)
    labels = np.zeros((len(masks), n), dtype=np.int8)
    verts = np.arange(n, dtype=np.int64)
    for l in range(1, L):
        inside = ((masks[:, l][:, None] >> verts[None, :]) & 1).astype(bool)
        labels[inside] = l
    # districts beyond the first are ordered by smallest vertex already, since each
    # recursive step takes the district holding the lowest unassigned vertex
    return labels


def metric_table(graph: PlanarStateGraph, labels: np.ndarray, metrics: Sequence[str],
                 chunk: int = 20000) -> np.ndarray:
    """Vectorised :func:`evaluate_metrics` over many districtings (no contiguity check)."""
    metrics = check_metrics(metrics)
    labels = np.atleast_2d(np.asarray(labels))
    N, n = labels.shape
    L = int(labels.max()) + 1 if N else 1
    out = np.empty((N, len(metrics)))
    pbar = graph.total_population / L
    W = graph.distances * graph.area[None, :]
    M = graph.median_constant
    Mp = graph.state_perimeter
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    total_votes = float(graph.dem.sum() + graph.rep.sum())
    for s in range(0, N, chunk):
        lab = labels[s:s + chunk]
        X = (lab[:, :, None] == np.arange(L)[None, None, :]).astype(float)
        cols: dict[str, np.ndarray] = {}
        if "rho" in metrics:
            P = np.einsum("bnl,n->bl", X, graph.population)
            cols["rho"] = np.max(np.abs(P - pbar), axis=1) / pbar
        if "sigma_A" in metrics:
            total = np.zeros(len(lab))
            for l in range(L):
                cost = X[:, :, l] @ W.T
                cost[X[:, :, l] == 0] = np.inf
                total += cost.min(axis=1)
            cols["sigma_A"] = total / M if M > 0 else np.zeros(len(lab))
        if "sigma_P" in metrics:
            cut = ((lab[:, u] != lab[:, v]) * graph.border[None, :]).sum(axis=1)
            cols["sigma_P"] = (2 * cut + Mp) / (L * Mp)
        if "phi_EG" in metrics or "phi_EG_directional" in metrics:
            D = np.einsum("bnl,n->bl", X, graph.dem)
            R = np.einsum("bnl,n->bl", X, graph.rep)
            net = wasted_vote_balance(D, R).sum(axis=1)
            directional = -net / total_votes
            cols["phi_EG"] = np.abs(directional)
            cols["phi_EG_directional"] = directional
        out[s:s + chunk] = np.column_stack([cols[k] for k in metrics])
    return out


class PartitionOracle(EnumeratedOracle):
    """Exact districting oracle over all connected ``L``-partitions of a small graph."""

    def __init__(self, graph: PlanarStateGraph, L: int, metrics: Sequence[str],
                 labels: np.ndarray | None = None):
        self.graph = graph
        self.L = L
        self.metrics = check_metrics(metrics)
        labels = enumerate_districtings(graph, L) if labels is None else labels
        if len(labels) == 0:
            raise DistrictingError("graph admits no connected districting with this L")
        super().__init__(metric_table(graph, labels, self.metrics), payload=labels)

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        sol = super().solve(alpha)
        return ForwardSolution(sol.sub_objective_image, assignment=None, objective=sol.objective,
                               label=np.asarray(sol.assignment, dtype=int))


def make_oracle(graph: PlanarStateGraph, L: int, metrics: Sequence[str], backend: str = "auto",
                cfg: OracleConfig | None = None, enumerate_limit: int = 22):
    """Enumeration oracle for small graphs, MILP otherwise (``backend='auto'``)."""
    if backend == "auto":
        small = graph.n <= enumerate_limit if L == 2 else graph.n <= 12
        backend = "enumerate" if small else "milp"
    if backend == "enumerate":
        return PartitionOracle(graph, L, metrics)
    if backend == "milp":
        return DistrictingOracle(build_fop(graph, L, metrics), cfg)
    raise ValueError(f"unknown districting backend {backend!r}")


# ------------------------------------------------------------------- plan I/O
def load_plan(path: str | Path, graph: PlanarStateGraph) -> Districting:
    """Read a ``{vertex_id: district_label}`` JSON plan."""
    with open(path) as fh:
        raw = json.load(fh)
    return plan_from_mapping(raw, graph)


def plan_from_mapping(raw: dict, graph: PlanarStateGraph) -> Districting:
    missing = [v for v in graph.ids if v not in raw]
    if missing:
        raise DistrictingError(f"plan is missing vertices {missing[:5]}")
    names = sorted({str(raw[v]) for v in graph.ids}, key=lambda s: (len(s), s))
    index = {s: i for i, s in enumerate(names)}
    return Districting(np.array([index[str(raw[v])] for v in graph.ids]))


def save_plan(d: Districting, graph: PlanarStateGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump({vid: int(l) for vid, l in zip(graph.ids, d.labels)}, fh, indent=1)

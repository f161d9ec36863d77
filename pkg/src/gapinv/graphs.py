"""Planar state graphs, synthetic generation and matching-based coarsening."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError, Voronoi

POP_CLAMP = 1e-9


class GraphSchemaError(ValueError):
    pass


def member_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for a (seed, member, iteration, ...) tuple."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])


@dataclass(frozen=True, eq=False)
class PlanarStateGraph:
    """Vertex-weighted planar graph of a state.

    ``groups[v]`` lists the original vertex indices merged into ``v``; it
    is the identity for an uncoarsened graph.
    """

    ids: tuple[str, ...]
    population: np.ndarray
    dem: np.ndarray
    rep: np.ndarray
    area: np.ndarray
    centroid: np.ndarray
    edges: np.ndarray
    border: np.ndarray
    state_perimeter: float = 0.0
    groups: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        n = len(self.ids)
        for name in ("population", "dem", "rep", "area"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise GraphSchemaError(f"{name} must have one entry per vertex")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise GraphSchemaError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, arr)
        cen = np.asarray(self.centroid, dtype=float).reshape(n, 2)
        object.__setattr__(self, "centroid", cen)
        e = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        b = np.asarray(self.border, dtype=float).ravel()
        if b.shape[0] != e.shape[0]:
            raise GraphSchemaError("border must have one entry per edge")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphSchemaError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphSchemaError("self loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e, b = e[order], b[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise GraphSchemaError("duplicate edges")
        if np.any(b < 0):
            raise GraphSchemaError("border lengths must be nonnegative")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "border", b)
        if len(set(self.ids)) != n:
            raise GraphSchemaError("vertex ids must be unique")
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        if not self.groups:
            object.__setattr__(self, "groups", tuple((i,) for i in range(n)))
        if n > 1 and not nx.is_connected(self.nx):
            raise GraphSchemaError("graph is not connected")

    # ------------------------------------------------------------ derived data
    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def nx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges))
        return g

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].append(int(v))
            nb[v].append(int(u))
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def border_matrix(self) -> np.ndarray:
        B = np.zeros((self.n, self.n))
        B[self.edges[:, 0], self.edges[:, 1]] = self.border
        B[self.edges[:, 1], self.edges[:, 0]] = self.border
        return B

    @cached_property
    def distances(self) -> np.ndarray:
        diff = self.centroid[:, None, :] - self.centroid[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))

    @cached_property
    def median_constant(self) -> float:
        """Area-weighted 1-median cost of the whole state, ``min_i sum_j d_ij a_j``."""
        return float(np.min(self.distances @ self.area))

    @property
    def total_population(self) -> float:
        return float(self.population.sum())

    def edge_index(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        hit = np.flatnonzero((self.edges[:, 0] == a) & (self.edges[:, 1] == b))
        if hit.size == 0:
            raise KeyError((u, v))
        return int(hit[0])

    # -------------------------------------------------------------------- I/O
    def to_dict(self) -> dict:
        return {
            "vertices": [
                {"id": self.ids[i], "population": float(self.population[i]), "dem": float(self.dem[i]),
                 "rep": float(self.rep[i]), "area": float(self.area[i]),
                 "cx": float(self.centroid[i, 0]), "cy": float(self.centroid[i, 1])}
                for i in range(self.n)
            ],
            "edges": [{"u": self.ids[u], "v": self.ids[v], "border": float(b)}
                      for (u, v), b in zip(self.edges, self.border)],
            "state_perimeter": float(self.state_perimeter),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlanarStateGraph":
        if not isinstance(data, dict):
            raise GraphSchemaError("top level must be an object")
        for key in ("vertices", "edges", "state_perimeter"):
            if key not in data:
                raise GraphSchemaError(f"missing field {key!r}")
        fields = ("id", "population", "dem", "rep", "area", "cx", "cy")
        rows = data["vertices"]
        for i, v in enumerate(rows):
            for f in fields:
                if f not in v:
                    raise GraphSchemaError(f"vertex {i} missing field {f!r}")
        ids = [str(v["id"]) for v in rows]
        pos = {vid: i for i, vid in enumerate(ids)}
        edges, border = [], []
        for i, e in enumerate(data["edges"]):
            for f in ("u", "v", "border"):
                if f not in e:
                    raise GraphSchemaError(f"edge {i} missing field {f!r}")
            try:
                edges.append((pos[str(e["u"])], pos[str(e["v"])]))
            except KeyError as exc:
                raise GraphSchemaError(f"edge {i} references unknown vertex {exc.args[0]!r}") from None
            border.append(float(e["border"]))
        col = lambda f: np.array([float(v[f]) for v in rows])  # noqa: E731
        return cls(tuple(ids), col("population"), col("dem"), col("rep"), col("area"),
                   np.column_stack([col("cx"), col("cy")]), np.array(edges, dtype=int).reshape(-1, 2),
                   np.array(border), float(data["state_perimeter"]))


def load_state_graph(path: str | Path) -> PlanarStateGraph:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphSchemaError(f"invalid JSON: {exc}") from None
    return PlanarStateGraph.from_dict(data)


def save_state_graph(graph: PlanarStateGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_dict(), fh, indent=1)


# ----------------------------------------------------------------- synthetic
def _voronoi_cells(points: np.ndarray) -> tuple[np.ndarray, dict[tuple[int, int], float]]:
    """Cell areas and shared-edge lengths of the Voronoi diagram clipped to the unit square.

    Mirroring the points across the four sides makes every original cell
    bounded and already clipped to the square.
    """
    n = len(points)
    x, y = points[:, 0], points[:, 1]
    mirrored = np.vstack([points, np.column_stack([-x, y]), np.column_stack([2 - x, y]),
                          np.column_stack([x, -y]), np.column_stack([x, 2 - y])])
    vor = Voronoi(mirrored)
    areas = np.empty(n)
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise QhullError("unbounded cell")
        areas[i] = ConvexHull(vor.vertices[region]).volume
    ridges: dict[tuple[int, int], float] = {}
    for (p, q), verts in zip(vor.ridge_points, vor.ridge_vertices):
        if p < n and q < n and -1 not in verts:
            a, b = vor.vertices[verts[0]], vor.vertices[verts[1]]
            ridges[(min(p, q), max(p, q))] = float(np.hypot(*(a - b)))
    return areas, ridges


def generate_synthetic_state(n: int, seed: int, _attempts: int = 50) -> PlanarStateGraph:
    """Random state on the unit square: Delaunay adjacency, Voronoi areas, random votes.

    Party A, party B and non-voting counts are independent integers in
    [10, 100]; population is their sum.  Degenerate draws are retried with
    ``seed + 1``.
    """
    if n < 4:
        raise ValueError("need at least 4 vertices")
    for attempt in range(_attempts):
        rng = np.random.default_rng(seed + attempt)
        pts = rng.uniform(size=(n, 2))
        try:
            tri = Delaunay(pts)
            areas, ridges = _voronoi_cells(pts)
        except QhullError:
            continue
        if abs(areas.sum() - 1.0) > 1e-6 or np.any(areas <= 0):
            continue
        pairs = set()
        for s in tri.simplices:
            for a in range(3):
                u, v = int(s[a]), int(s[(a + 1) % 3])
                pairs.add((min(u, v), max(u, v)))
        edges = np.array(sorted(pairs), dtype=int)
        border = np.array([ridges.get((u, v), 0.0) for u, v in edges])
        dem = rng.integers(10, 101, size=n).astype(float)
        rep = rng.integers(10, 101, size=n).astype(float)
        nonvoting = rng.integers(10, 101, size=n).astype(float)
        return PlanarStateGraph(tuple(f"v{i}" for i in range(n)), dem + rep + nonvoting, dem, rep, areas,
                                pts, edges, border, 4.0)
    raise RuntimeError(f"could not draw a nondegenerate state after {_attempts} attempts")


def grid_state(rows: int, cols: int, population: Sequence[float] | None = None,
               dem: Sequence[float] | None = None, rep: Sequence[float] | None = None) -> PlanarStateGraph:
    """Unit-cell grid graph; handy for small hand-checkable fixtures."""
    n = rows * cols
    pop = np.ones(n) * 10 if population is None else np.asarray(population, dtype=float)
    d = pop / 2 if dem is None else np.asarray(dem, dtype=float)
    r = pop - d if rep is None else np.asarray(rep, dtype=float)
    cen = np.array([(c + 0.5, r_ + 0.5) for r_ in range(rows) for c in range(cols)], dtype=float)
    edges = []
    for r_ in range(rows):
        for c in range(cols):
            i = r_ * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r_ + 1 < rows:
                edges.append((i, i + cols))
    return PlanarStateGraph(tuple(f"g{i}" for i in range(n)), pop, d, r, np.ones(n), cen,
                            np.array(edges, dtype=int).reshape(-1, 2), np.ones(len(edges)),
                            2.0 * (rows + cols))


# ---------------------------------------------------------------- matchings
@dataclass(frozen=True)
class Matching:
    edge_indices: np.ndarray
    order_seed: int | None = None

    def pairs(self, graph: PlanarStateGraph) -> list[tuple[int, int]]:
        return [tuple(map(int, graph.edges[e])) for e in self.edge_indices]

    def __len__(self) -> int:
        return len(self.edge_indices)


def greedy_matching(graph: PlanarStateGraph, order: Sequence[int]) -> np.ndarray:
    """Accept edges in ``order`` whenever both endpoints are still free."""
    used = np.zeros(graph.n, dtype=bool)
    chosen = []
    for e in order:
        u, v = graph.edges[e]
        if not used[u] and not used[v]:
            used[u] = used[v] = True
            chosen.append(int(e))
    return np.array(sorted(chosen), dtype=int)


def is_maximal_matching(graph: PlanarStateGraph, edge_indices: Sequence[int]) -> bool:
    used = np.zeros(graph.n, dtype=int)
    for e in edge_indices:
        used[graph.edges[e]] += 1
    if np.any(used > 1):
        return False
    return all(used[u] or used[v] for u, v in graph.edges)


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def match_random(graph: PlanarStateGraph, seed: int | np.random.Generator) -> Matching:
    """Maximal matching from a uniformly random edge order."""
    if graph.m == 0:
        raise ValueError("graph has no edges")
    rng = _rng(seed)
    order = rng.permutation(graph.m)
    return Matching(greedy_matching(graph, order), seed if isinstance(seed, int) else None)


def population_edge_means(graph: PlanarStateGraph) -> np.ndarray:
    mean_pop = graph.population.mean()
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    means = (graph.population[u] + graph.population[v]) / (2.0 * mean_pop) if mean_pop > 0 else np.zeros(graph.m)
    return np.maximum(means, POP_CLAMP)


def match_population(graph: PlanarStateGraph, seed: int | np.random.Generator) -> Matching:
    """Maximal matching ordered by exponential keys whose mean grows with edge population.

    Light edges tend to be contracted first, which keeps coarse vertex
    populations more even.
    """
    if graph.m == 0:
        raise ValueError("graph has no edges")
    rng = _rng(seed)
    keys = rng.standard_exponential(graph.m) * population_edge_means(graph)
    order = np.argsort(keys, kind="stable")
    return Matching(greedy_matching(graph, order), seed if isinstance(seed, int) else None)


def contract(graph: PlanarStateGraph, matching: Matching | Sequence[int]) -> PlanarStateGraph:
    """Merge the endpoints of every matched edge."""
    idx = matching.edge_indices if isinstance(matching, Matching) else np.asarray(matching, dtype=int)
    partner = np.full(graph.n, -1)
    for e in idx:
        u, v = graph.edges[e]
        if partner[u] >= 0 or partner[v] >= 0:
            raise ValueError("edges of a matching must be vertex-disjoint")
        partner[u], partner[v] = v, u
    new_of = np.full(graph.n, -1)
    members: list[list[int]] = []
    for v in range(graph.n):
        if new_of[v] >= 0:
            continue
        new_of[v] = len(members)
        group = [v]
        if partner[v] >= 0:
            new_of[partner[v]] = new_of[v]
            group.append(int(partner[v]))
        members.append(group)
    k = len(members)
    agg = lambda arr: np.array([arr[g].sum() for g in members])  # noqa: E731
    area = agg(graph.area)
    cen = np.empty((k, 2))
    for i, g in enumerate(members):
        w = graph.area[g]
        cen[i] = (w @ graph.centroid[g]) / w.sum() if w.sum() > 0 else graph.centroid[g].mean(axis=0)
    merged: dict[tuple[int, int], float] = {}
    for (u, v), b in zip(graph.edges, graph.border):
        a, c = int(new_of[u]), int(new_of[v])
        if a == c:
            continue
        key = (min(a, c), max(a, c))
        merged[key] = merged.get(key, 0.0) + float(b)
    keys = sorted(merged)
    ids = tuple("+".join(graph.ids[v] for v in g) for g in members)
    groups = tuple(tuple(sorted(o for v in g for o in graph.groups[v])) for g in members)
    return PlanarStateGraph(ids, agg(graph.population), agg(graph.dem), agg(graph.rep), area, cen,
                            np.array(keys, dtype=int).reshape(-1, 2), np.array([merged[k_] for k_ in keys]),
                            graph.state_perimeter, groups)


SCHEMES = ("random", "population", "boosted")


def coarsen(graph: PlanarStateGraph, rounds: int = 1, scheme: str = "random",
            seed: int | np.random.Generator = 0) -> PlanarStateGraph:
    """Apply ``rounds`` successive matchings of the given scheme (random or population)."""
    rng = _rng(seed)
    matcher = {"random": match_random, "population": match_population}.get(scheme)
    if matcher is None:
        raise ValueError(f"scheme {scheme!r} is not a single-graph scheme; use boosted_ensemble")
    g = graph
    for _ in range(rounds):
        if g.m == 0:
            break
        g = contract(g, matcher(g, rng))
    return g


class BoostedCoarsener:
    """Sequential coarsening that reweights edges after every ensemble member.

    Weights are tracked per coarsening round and keyed by the pair of
    original-vertex groups an edge joins, so the same coarse edge met by a
    later member picks up its history.  With ``semantics='prose'`` an edge
    that was contracted has its weight multiplied by ``eta`` (it becomes
    less likely to be contracted again) and every other edge by
    ``1/eta``; ``'pseudocode'`` applies the opposite update.
    """

    def __init__(self, graph: PlanarStateGraph, eta: float = 1.5, rounds: int = 1, seed: int = 0,
                 semantics: str = "prose", initial: str = "uniform", allow_degenerate: bool = False):
        if not (eta > 1 or (allow_degenerate and eta == 1)):
            raise ValueError("eta must exceed 1")
        if semantics not in ("prose", "pseudocode"):
            raise ValueError("semantics must be 'prose' or 'pseudocode'")
        if initial not in ("uniform", "population"):
            raise ValueError("initial must be 'uniform' or 'population'")
        if rounds < 1:
            raise ValueError("rounds must be positive")
        self.graph = graph
        self.eta = float(eta)
        self.rounds = rounds
        self.seed = seed
        self.semantics = semantics
        self.initial = initial
        self.weights: list[dict[frozenset, float]] = [dict() for _ in range(rounds)]
        self.members = 0

    def _key(self, g: PlanarStateGraph, e: int) -> frozenset:
        u, v = g.edges[e]
        return frozenset((g.groups[u], g.groups[v]))

    def next(self) -> PlanarStateGraph:
        rng = member_rng(self.seed, self.members)
        g = self.graph
        up, down = (self.eta, 1.0 / self.eta)
        if self.semantics == "pseudocode":
            up, down = down, up
        for r in range(self.rounds):
            if g.m == 0:
                break
            table = self.weights[r]
            base = population_edge_means(g) if self.initial == "population" else np.ones(g.m)
            keys = [self._key(g, e) for e in range(g.m)]
            w = np.array([table.get(k, b) for k, b in zip(keys, base)])
            order_keys = w * rng.standard_exponential(g.m)
            chosen = greedy_matching(g, np.argsort(order_keys, kind="stable"))
            hit = np.zeros(g.m, dtype=bool)
            hit[chosen] = True
            for e, k in enumerate(keys):
                table[k] = w[e] * (up if hit[e] else down)
            g = contract(g, chosen)
        self.members += 1
        return g


def boosted_ensemble(graph: PlanarStateGraph, n: int, eta: float = 1.5, rounds: int = 1, seed: int = 0,
                     semantics: str = "prose", initial: str = "uniform",
                     allow_degenerate: bool = False) -> list[PlanarStateGraph]:
    if n < 1:
        raise ValueError("n must be positive")
    gen = BoostedCoarsener(graph, eta, rounds, seed, semantics, initial, allow_degenerate)
    return [gen.next() for _ in range(n)]


def coarsening_ensemble(graph: PlanarStateGraph, n: int, rounds: int = 1, scheme: str = "random",
                        seed: int = 0, eta: float = 1.5, **boost_kw) -> list[PlanarStateGraph]:
    """``n`` coarsenings; member ``i`` depends only on ``(seed, i)`` except for boosting."""
    if scheme == "boosted":
        return boosted_ensemble(graph, n, eta, rounds, seed, **boost_kw)
    return [coarsen(graph, rounds, scheme, member_rng(seed, i)) for i in range(n)]


def lift_labels(coarse: PlanarStateGraph, labels: np.ndarray, n_original: int) -> np.ndarray:
    """Map a districting of a coarse graph back to the original vertices."""
    out = np.full(n_original, -1, dtype=int)
    for v, group in enumerate(coarse.groups):
        out[list(group)] = labels[v]
    if np.any(out < 0):
        raise ValueError("coarse graph groups do not cover the original vertices")
    return out


def total_counts(graph: PlanarStateGraph) -> dict[str, float]:
    return {"population": graph.total_population, "dem": float(graph.dem.sum()),
            "rep": float(graph.rep.sum()), "area": float(graph.area.sum())}


__all__ = [
    "GraphSchemaError", "PlanarStateGraph", "Matching", "load_state_graph", "save_state_graph",
    "generate_synthetic_state", "grid_state", "match_random", "match_population", "contract", "coarsen",
    "boosted_ensemble", "BoostedCoarsener", "coarsening_ensemble", "lift_labels", "member_rng",
    "is_maximal_matching", "greedy_matching", "total_counts",
]

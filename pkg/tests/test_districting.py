import copy
import itertools
import os
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from gapinv.districting import (
    DistrictingError,
    Districting,
    DistrictingOracle,
    PartitionOracle,
    build_fop,
    decode_districting,
    enumerate_districtings,
    evaluate_metrics,
    load_plan,
    make_oracle,
    metric_table,
    plan_from_mapping,
    save_plan,
    wasted_vote_balance,
)
from gapinv.graphs import PlanarStateGraph, generate_synthetic_state, grid_state, load_state_graph
from gapinv.model_io import ForwardOracle, InfeasibleForward, sample_simplex, solve_weighted

IOWA_ACCEPTED = [797584, 797589, 797551, 797645]
IOWA_REJECTED = [797655, 797556, 797584, 797574]


def path_graph(pop, dem=None, rep=None):
    n = len(pop)
    pop = np.asarray(pop, dtype=float)
    return PlanarStateGraph(tuple(f"p{i}" for i in range(n)), pop,
                            pop / 2 if dem is None else np.asarray(dem, float),
                            pop / 2 if rep is None else np.asarray(rep, float),
                            np.ones(n), np.column_stack([np.arange(n), np.zeros(n)]),
                            np.array([(i, i + 1) for i in range(n - 1)]).reshape(-1, 2), np.ones(n - 1), 4.0)


def test_rho_ten_districts():
    g = path_graph([101] * 9 + [91])
    assert evaluate_metrics(g, np.arange(10)).rho == pytest.approx(0.09)


def test_efficiency_gap_hand_example():
    assert wasted_vote_balance([60, 30], [40, 70]).tolist() == [-30.0, 10.0]
    g = path_graph([100, 100], dem=[60, 30], rep=[40, 70])
    m = evaluate_metrics(g, [0, 1])
    assert m.phi_EG == pytest.approx(0.1) and m.phi_EG_directional == pytest.approx(0.1)


def test_tied_district_counts_as_republican():
    # tie: Republicans win, Democrats waste all 50, Republicans waste 0
    assert wasted_vote_balance([50], [50]).tolist() == [50.0]


def test_single_district():
    g = generate_synthetic_state(10, 0)
    m = evaluate_metrics(g, np.zeros(10, dtype=int))
    assert m.sigma_P == pytest.approx(1.0) and m.rho == 0.0
    assert m.sigma_A == pytest.approx(1.0)


@pytest.mark.parametrize("pops,expected", [(IOWA_ACCEPTED, 6.6137e-5), (IOWA_REJECTED, 7.8674e-5)])
def test_rho_from_published_district_populations(pops, expected):
    g = path_graph(pops)
    assert evaluate_metrics(g, np.arange(4)).rho == pytest.approx(expected, rel=5e-3)


def test_metric_vector_invariants():
    g = generate_synthetic_state(12, 5)
    labels = enumerate_districtings(g, 3)
    rng = np.random.default_rng(0)
    for lab in labels[rng.choice(len(labels), 20, replace=False)]:
        m = evaluate_metrics(g, lab)
        assert m.rho >= 0 and m.sigma_A > 0 and m.sigma_P >= 1 / 3
        assert m.phi_EG == abs(m.phi_EG_directional)


def test_metric_table_matches_direct_evaluation():
    g = generate_synthetic_state(10, 2)
    labels = enumerate_districtings(g, 3)
    metrics = ("rho", "sigma_A", "sigma_P", "phi_EG_directional")
    tab = metric_table(g, labels, metrics)
    for i in range(0, len(labels), max(1, len(labels) // 25)):
        assert np.allclose(tab[i], evaluate_metrics(g, labels[i]).select(metrics), atol=1e-12)


def test_disconnected_district_rejected():
    g = path_graph([10, 10, 10])
    with pytest.raises(DistrictingError):
        evaluate_metrics(g, [0, 1, 0])


def test_labels_validation():
    with pytest.raises(DistrictingError):
        Districting(np.array([0, 2, 2]))
    with pytest.raises(DistrictingError):
        Districting(np.array([1, 1]))


def test_mutually_exclusive_eg_metrics():
    with pytest.raises(DistrictingError):
        build_fop(grid_state(2, 2), 2, ("phi_EG", "phi_EG_directional"))
    with pytest.raises(DistrictingError):
        build_fop(grid_state(2, 2), 5)


def test_enumeration_counts():
    # connected 2-partitions of a path on n vertices: n - 1 cut points
    assert len(enumerate_districtings(path_graph([1] * 6), 2)) == 5
    # 2x2 cycle: 4 singletons + 2 pairs of adjacent vertices
    assert len(enumerate_districtings(grid_state(2, 2), 2)) == 6
    assert len(enumerate_districtings(path_graph([1] * 5), 3)) == 6


def _fixed_x_feasible(dm, labels, centers):
    m = copy.deepcopy(dm.model)
    n = dm.graph.n
    for i in range(n):
        for j in range(n):
            val = 1.0 if (i in centers and labels[j] == labels[i]) else 0.0
            m.add_constraint({int(dm.x[i, j]): 1.0}, "==", val)
    try:
        solve_weighted(m, dm.C, np.full(dm.C.k, 1.0 / dm.C.k))
        return True
    except InfeasibleForward:
        return False


def test_milp_feasible_projection_matches_enumeration():
    g = grid_state(2, 2)
    dm = build_fop(g, 2, ("rho", "sigma_A", "phi_EG"))
    milp = set()
    for bits in itertools.product((0, 1), repeat=3):
        lab = np.array((0,) + bits)
        if lab.max() != 1:
            continue
        for c0 in np.flatnonzero(lab == 0):
            for c1 in np.flatnonzero(lab == 1):
                if _fixed_x_feasible(dm, lab, {int(c0), int(c1)}):
                    milp.add(tuple(lab))
    assert milp == {tuple(r) for r in enumerate_districtings(g, 2)}


def test_grid_balanced_split():
    g = grid_state(2, 2, population=[10, 12, 14, 16])
    dm = build_fop(g, 2, ("rho", "sigma_A", "phi_EG"))
    sol = ForwardOracle(dm.model, dm.C).solve(np.array([1.0, 0.0, 0.0]))
    d = decode_districting(dm, sol)
    assert sorted(np.bincount(d.labels).tolist()) == [2, 2]
    labels = enumerate_districtings(g, 2)
    best = metric_table(g, labels, ["rho"]).min()
    assert evaluate_metrics(g, d).rho == pytest.approx(best)


def test_decode_single_district_and_round_trip():
    g = generate_synthetic_state(6, 4)
    dm = build_fop(g, 1, ("rho", "sigma_A", "sigma_P", "phi_EG"))
    d = decode_districting(dm, ForwardOracle(dm.model, dm.C).solve(np.full(4, 0.25)))
    assert d.labels.tolist() == [0] * 6
    dm = build_fop(g, 2, ("rho", "sigma_A", "sigma_P", "phi_EG"))
    sol = ForwardOracle(dm.model, dm.C).solve(np.full(4, 0.25))
    d = decode_districting(dm, sol)
    direct = evaluate_metrics(g, d).select(dm.metrics)
    assert np.allclose(sol.sub_objective_image, direct, atol=1e-6)


def test_decode_rejects_fractional():
    dm = build_fop(grid_state(2, 2), 2)
    y = np.zeros(dm.model.n_vars)
    y[dm.x[0, 0]] = 0.5
    with pytest.raises(DistrictingError):
        decode_districting(dm, y)


@pytest.mark.parametrize("seed,L,metrics", [
    (0, 2, ("rho", "sigma_A", "phi_EG")),
    (1, 3, ("rho", "sigma_P", "phi_EG")),
    (2, 2, ("rho", "sigma_P", "phi_EG_directional")),
])
def test_milp_optimum_matches_enumeration(seed, L, metrics):
    g = generate_synthetic_state(7, seed)
    milp = DistrictingOracle(build_fop(g, L, metrics))
    exact = PartitionOracle(g, L, metrics)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        a = sample_simplex(len(metrics), rng)
        s = milp.solve(a)
        assert a @ s.sub_objective_image == pytest.approx(a @ exact.solve(a).sub_objective_image, abs=1e-6)
        labels = s.label
        for l in range(L):
            members = np.flatnonzero(labels == l).tolist()
            assert len(members) == 1 or nx.is_connected(g.nx.subgraph(members))


def test_make_oracle_backend_choice():
    small = generate_synthetic_state(10, 0)
    assert isinstance(make_oracle(small, 3, ("rho", "phi_EG")), PartitionOracle)
    assert isinstance(make_oracle(small, 3, ("rho", "phi_EG"), backend="milp"), DistrictingOracle)
    with pytest.raises(ValueError):
        make_oracle(small, 2, ("rho",), backend="cplex")


def test_plan_io(tmp_path):
    g = grid_state(2, 2)
    d = Districting(np.array([0, 0, 1, 1]))
    save_plan(d, g, tmp_path / "plan.json")
    assert load_plan(tmp_path / "plan.json", g).labels.tolist() == [0, 0, 1, 1]
    raw = {"g0": "7", "g1": "7", "g2": "12", "g3": "12"}
    assert plan_from_mapping(raw, g).labels.tolist() == [0, 0, 1, 1]
    with pytest.raises(DistrictingError):
        plan_from_mapping({"g0": 1}, g)


def iowa_dir() -> Path | None:
    for cand in (os.environ.get("GAPINV_IOWA_DIR"), Path(__file__).parent / "data" / "iowa"):
        if cand and (Path(cand) / "graph.json").exists():
            return Path(cand)
    return None


@pytest.mark.skipif(iowa_dir() is None, reason="Iowa county graph not available offline; set GAPINV_IOWA_DIR")
@pytest.mark.parametrize("plan,expected", [("accepted", (0.6116, 6.6137e-5, 0.4163)),
                                           ("rejected", (0.5773, 7.8674e-5, 0.0882))])
def test_iowa_table(plan, expected):
    root = iowa_dir()
    g = load_state_graph(root / "graph.json")
    assert g.n == 99
    m = evaluate_metrics(g, load_plan(root / f"{plan}.json", g))
    assert np.allclose(m.select(("sigma_P", "rho", "phi_EG")), expected, rtol=5e-3)

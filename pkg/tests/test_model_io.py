import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapinv.model_io import (
    EnumeratedOracle,
    ForwardOracle,
    ForwardSolution,
    InfeasibleForward,
    MilpModel,
    MpsParseError,
    OracleConfig,
    SubobjectiveMatrix,
    UnboundedForward,
    UnsupportedSectionError,
    VarKind,
    derive_subobjectives,
    generate_inverse_input,
    load_mps,
    parse_mps,
    sample_simplex,
    solve_weighted,
    write_mps,
)
from milp_fixtures import fig1_model, fig1_vertices, random_binary_fixture

DATA = Path(__file__).parent / "data"


def test_tiny_mps():
    m = load_mps(DATA / "tiny.mps")
    assert (m.n_vars, m.n_rows) == (2, 1)
    assert m.var_names == ["x", "y"]
    assert m.row_ub[0] == 1 and np.isinf(m.row_lb[0])
    assert m.A.toarray().tolist() == [[1.0, 1.0]]


def test_empty_file_is_parse_error(tmp_path):
    p = tmp_path / "empty.mps"
    p.write_text("")
    with pytest.raises(MpsParseError):
        load_mps(p)


def test_bad_number_names_line():
    text = "NAME t\nROWS\n N obj\n L c\nCOLUMNS\n x c abc\nRHS\nENDATA\n"
    with pytest.raises(MpsParseError) as e:
        parse_mps(text)
    assert e.value.line_no == 6


def test_unsupported_section_named():
    text = "NAME t\nROWS\n N obj\nCOLUMNS\n x obj 1\nQUADOBJ\n x x 1\nENDATA\n"
    with pytest.raises(UnsupportedSectionError) as e:
        parse_mps(text)
    assert e.value.section == "QUADOBJ"


def test_ranges_bounds_objsense():
    text = """NAME r
OBJSENSE
    MAX
ROWS
 N obj
 G g1
 E e1
COLUMNS
 MARKER 'MARKER' 'INTORG'
 n obj 1 g1 1
 MARKER 'MARKER' 'INTEND'
 x g1 1 e1 2
RHS
 rhs g1 1 e1 4
RANGES
 rng g1 3 e1 -2
BOUNDS
 UP bnd n 7
 MI bnd x
 UP bnd x 9
ENDATA
"""
    m = parse_mps(text)
    assert m.objective_sense == -1
    assert m.kinds == [VarKind.INTEGER, VarKind.CONTINUOUS]
    assert m.row_lb.tolist() == [1.0, 2.0] and m.row_ub.tolist() == [4.0, 4.0]
    assert m.ub.tolist() == [7.0, 9.0] and m.lb[1] == -np.inf


def _mixed_model() -> MilpModel:
    m = MilpModel("mixed")
    c = [m.add_var(f"c{i}", lb=0, ub=10) for i in range(4)]
    b = [m.add_var(f"b{i}", "binary") for i in range(3)]
    m.add_constraint({c[0]: 1, c[1]: 1, b[0]: -5}, "<=", 3)
    m.add_constraint({c[2]: 1, b[1]: 2, b[2]: 1}, ">=", 2)
    m.add_constraint({c[3]: 1, c[0]: -1}, "==", 1)
    m.add_constraint({b[0]: 1, b[1]: 1}, "<=", 1)
    return m


def test_mps_round_trip_preserves_kinds_and_solutions(tmp_path):
    m = _mixed_model()
    write_mps(m, tmp_path / "mixed.mps")
    m2 = load_mps(tmp_path / "mixed.mps")
    assert m2.kinds == m.kinds
    assert np.allclose(m2.A.toarray(), m.A.toarray())
    assert np.allclose(m2.lb, m.lb) and np.allclose(m2.ub, m.ub)
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = sample_simplex(4, rng)
        C = SubobjectiveMatrix.unit_rows(m.continuous_indices(), m.n_vars)
        s1, s2 = solve_weighted(m, C, a), solve_weighted(m2, C, a)
        assert np.allclose(s1.assignment, s2.assignment)


def test_derive_subobjectives():
    m = _mixed_model()
    m.add_var("c4", lb=0, ub=1)
    C = derive_subobjectives(m, 4, seed=7)
    assert C.k == 4
    rows = C.matrix.toarray()
    assert np.all((rows != 0).sum(axis=1) == 1) and np.all(rows.max(axis=1) == 1)
    cols = np.argmax(rows, axis=1)
    assert len(set(cols)) == 4
    assert all(m.kinds[c] is VarKind.CONTINUOUS for c in cols)
    assert np.array_equal(rows, derive_subobjectives(m, 4, seed=7).matrix.toarray())
    y = np.arange(m.n_vars, dtype=float)
    assert np.array_equal(C.image(y), y[cols])


def test_derive_subobjectives_too_few():
    m = MilpModel()
    for i in range(3):
        m.add_var(f"c{i}")
    with pytest.raises(ValueError):
        derive_subobjectives(m, 4, seed=0)


def test_sample_simplex():
    assert sample_simplex(1, 5).tolist() == [1.0]
    assert np.array_equal(sample_simplex(4, 3), sample_simplex(4, 3))
    with pytest.raises(ValueError):
        sample_simplex(0, 1)
    rng = np.random.default_rng(11)
    draws = np.array([sample_simplex(3, rng) for _ in range(100_000)])
    assert np.allclose(draws.mean(axis=0), 1 / 3, atol=0.01)


@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_sample_simplex_on_simplex(k, seed):
    a = sample_simplex(k, seed)
    assert np.all(a >= 0) and abs(a.sum() - 1) <= 1e-12


def test_solve_weighted_fig1():
    m, C = fig1_model()
    assert solve_weighted(m, C, np.array([1.0, 0.0])).sub_objective_image[0] == pytest.approx(1.0)
    assert solve_weighted(m, C, np.array([0.0, 1.0])).sub_objective_image[1] == pytest.approx(1.0)
    a = np.array([0.28, 0.72])
    y = generate_inverse_input(m, C, a).sub_objective_image
    best = min(fig1_vertices() @ a)
    assert a @ y == pytest.approx(best)
    assert any(np.allclose(y, v) for v in fig1_vertices())


def test_infeasible_and_unbounded():
    m = MilpModel()
    x = m.add_var("x", lb=1, ub=2)
    m.add_constraint({x: 1}, "<=", 0)
    with pytest.raises(InfeasibleForward):
        solve_weighted(m, SubobjectiveMatrix(np.ones((1, 1))), np.ones(1))
    m = MilpModel()
    m.add_var("x", lb=-np.inf, ub=np.inf)
    with pytest.raises(UnboundedForward):
        solve_weighted(m, SubobjectiveMatrix(np.ones((1, 1))), np.ones(1))


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(mip_rel_gap=1.0)
    with pytest.raises(ValueError):
        OracleConfig(time_limit=0)
    with pytest.raises(ValueError):
        OracleConfig.from_mapping({"bogus": 1})
    assert OracleConfig.from_mapping({"time_limit": None}).time_limit == np.inf


@pytest.mark.parametrize("seed", range(6))
def test_oracle_matches_enumeration(seed):
    f = random_binary_fixture(seed)
    oracle = ForwardOracle(f.model, f.C)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        a = sample_simplex(f.C.k, rng)
        sol = oracle.solve(a)
        assert a @ sol.sub_objective_image <= (f.images @ a).min() + 1e-9
        assert f.model.is_feasible(sol.assignment)
        assert np.allclose(f.C.image(sol.assignment), sol.sub_objective_image, atol=1e-9)
        ints = sol.assignment[f.model.integrality == 1]
        assert np.array_equal(ints, np.round(ints))


def test_enumerated_oracle_ties_lowest_index():
    o = EnumeratedOracle(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))
    assert o.solve(np.array([0.5, 0.5])).label == 0
    assert o.solve(np.array([0.0, 1.0])).label == 0


def test_forward_solution_from_image():
    s = ForwardSolution.from_image([1, 2])
    assert s.sub_objective_image.tolist() == [1.0, 2.0] and s.assignment is None


def test_model_rejects_bad_references():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ValueError):
        m.add_var("x")
    with pytest.raises(ValueError):
        m.add_constraint({3: 1.0}, "<=", 1)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=4))
def test_lp_optimum_beats_vertices(rows):
    # box-constrained LP: optimum never worse than any box corner that is feasible
    m = MilpModel()
    x = m.add_var("x", lb=0, ub=1)
    y = m.add_var("y", lb=0, ub=1)
    for a, b in rows:
        m.add_constraint({x: a, y: b}, "<=", abs(a) + abs(b))
    C = SubobjectiveMatrix(np.array([[1.0, -1.0], [-1.0, 0.5]]))
    alpha = np.array([0.3, 0.7])
    sol = solve_weighted(m, C, alpha)
    for corner in itertools.product((0.0, 1.0), repeat=2):
        if m.is_feasible(np.array(corner)):
            assert alpha @ sol.sub_objective_image <= alpha @ C.image(np.array(corner)) + 1e-9

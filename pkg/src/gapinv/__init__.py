"""Gap-gradient inverse optimization for multi-objective mixed-integer programs."""
from .gap_core import (
    GapEvaluation,
    MasterResult,
    SolutionPool,
    evaluate_gap,
    master_abs,
    master_rel,
    mp_solve_verify,
    project_simplex,
    subgradient,
)
from .model_io import (
    EnumeratedOracle,
    ForwardOracle,
    ForwardSolution,
    MilpModel,
    OracleConfig,
    SubobjectiveMatrix,
    derive_subobjectives,
    generate_inverse_input,
    load_mps,
    sample_simplex,
    solve_weighted,
    write_mps,
)
from .solvers import (
    SolverParams,
    SolverResult,
    solve,
    solve_cp_abs,
    solve_cp_rel,
    solve_fw,
    solve_pgd,
    solve_pgd_accel,
)

__version__ = "0.1.0"

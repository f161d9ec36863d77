"""MILP models, the forward-problem oracle and inverse-instance generation.

The forward optimization problem (FOP) is ``min alpha^T C y`` over the
feasible set of a :class:`MilpModel`.  Oracles expose a single method,
``solve(alpha) -> ForwardSolution``, and every solver in the package talks
to the FOP only through that method.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6


class OracleError(RuntimeError):
    """Base class for forward-solve failures."""


class InfeasibleForward(OracleError):
    pass


class UnboundedForward(OracleError):
    pass


class Timeout(OracleError):
    """Raised when the backend hits its time limit before proving optimality."""

    def __init__(self, message: str, incumbent: "ForwardSolution | None" = None):
        super().__init__(message)
        self.incumbent = incumbent


class MpsParseError(ValueError):
    def __init__(self, message: str, line_no: int | None = None, line: str | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}" + (f" ({line.strip()!r})" if line else "")
        super().__init__(message)
        self.line_no = line_no


class UnsupportedSectionError(MpsParseError):
    def __init__(self, section: str, line_no: int | None = None):
        super().__init__(f"unsupported MPS section {section}", line_no)
        self.section = section


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class MilpModel:
    """Mixed-integer linear model ``row_lb <= A y <= row_ub``, ``lb <= y <= ub``.

    Variables and rows are appended with :meth:`add_var` and
    :meth:`add_constraint`; the sparse matrix is assembled lazily.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self._kinds: list[VarKind] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: list[float] = []
        self._index: dict[str, int] = {}
        self.row_names: list[str] = []
        self._row_lb: list[float] = []
        self._row_ub: list[float] = []
        self._rows_i: list[int] = []
        self._rows_j: list[int] = []
        self._rows_v: list[float] = []
        self._cache: sp.csr_matrix | None = None
        self.objective_sense = 1

    # ------------------------------------------------------------------ build
    def add_var(self, name: str, kind: VarKind | str = VarKind.CONTINUOUS,
                lb: float = 0.0, ub: float = math.inf, obj: float = 0.0) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        kind = VarKind(kind)
        if kind is VarKind.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self.var_names)
        self._index[name] = idx
        self.var_names.append(name)
        self._kinds.append(kind)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._obj.append(float(obj))
        return idx

    def add_constraint(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]],
                       sense: str, rhs: float, name: str | None = None) -> int:
        """Append a row; ``sense`` is one of ``<=``, ``>=``, ``==`` (or L/G/E)."""
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        row = len(self.row_names)
        n = len(self.var_names)
        merged: dict[int, float] = {}
        for j, v in items:
            j = int(j)
            if not 0 <= j < n:
                raise ValueError(f"row {name or row} references undeclared variable {j}")
            merged[j] = merged.get(j, 0.0) + float(v)
        for j, v in merged.items():
            if v != 0.0:
                self._rows_i.append(row)
                self._rows_j.append(j)
                self._rows_v.append(v)
        lo, hi = _sense_bounds(sense, float(rhs))
        self._row_lb.append(lo)
        self._row_ub.append(hi)
        self.row_names.append(name or f"r{row}")
        self._cache = None
        return row

    def set_row_bounds(self, row: int, lo: float, hi: float) -> None:
        self._row_lb[row] = lo
        self._row_ub[row] = hi

    # ----------------------------------------------------------------- access
    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def kinds(self) -> list[VarKind]:
        return list(self._kinds)

    @property
    def lb(self) -> np.ndarray:
        return np.asarray(self._lb, dtype=float)

    @property
    def ub(self) -> np.ndarray:
        return np.asarray(self._ub, dtype=float)

    @property
    def objective(self) -> np.ndarray:
        return np.asarray(self._obj, dtype=float)

    @property
    def row_lb(self) -> np.ndarray:
        return np.asarray(self._row_lb, dtype=float)

    @property
    def row_ub(self) -> np.ndarray:
        return np.asarray(self._row_ub, dtype=float)

    @property
    def A(self) -> sp.csr_matrix:
        if self._cache is None:
            self._cache = sp.csr_matrix(
                (self._rows_v, (self._rows_i, self._rows_j)),
                shape=(self.n_rows, self.n_vars),
            )
        return self._cache

    @property
    def integrality(self) -> np.ndarray:
        return np.array([k is not VarKind.CONTINUOUS for k in self._kinds], dtype=np.int8)

    def continuous_indices(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self._kinds) if k is VarKind.CONTINUOUS], dtype=int)

    def is_feasible(self, y: np.ndarray, tol: float = 1e-6) -> bool:
        y = np.asarray(y, dtype=float)
        if np.any(y < self.lb - tol) or np.any(y > self.ub + tol):
            return False
        ints = self.integrality.astype(bool)
        if np.any(np.abs(y[ints] - np.round(y[ints])) > tol):
            return False
        if self.n_rows == 0:
            return True
        ay = self.A @ y
        return bool(np.all(ay >= self.row_lb - tol) and np.all(ay <= self.row_ub + tol))

    def __repr__(self) -> str:
        return f"MilpModel({self.name!r}, vars={self.n_vars}, cons={self.n_rows})"


def _sense_bounds(sense: str, rhs: float) -> tuple[float, float]:
    s = sense.strip().upper()
    if s in ("<=", "L"):
        return -math.inf, rhs
    if s in (">=", "G"):
        return rhs, math.inf
    if s in ("==", "=", "E"):
        return rhs, rhs
    raise ValueError(f"unknown constraint sense {sense!r}")


@dataclass(frozen=True)
class SubobjectiveMatrix:
    """``k x n`` sparse matrix whose rows are the linear sub-objectives."""

    matrix: sp.csr_matrix
    names: tuple[str, ...] = ()

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if m.shape[0] < 1:
            raise ValueError("need at least one sub-objective row")
        if np.any(np.diff(m.indptr) == 0) or np.any(abs(m).sum(axis=1) == 0):
            raise ValueError("sub-objective rows must be nonzero")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"f{i}" for i in range(m.shape[0])))
        elif len(self.names) != m.shape[0]:
            raise ValueError("names length does not match row count")

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def image(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.matrix @ np.asarray(y, dtype=float)).ravel()

    def weighted(self, alpha: np.ndarray) -> np.ndarray:
        """Objective vector ``C^T alpha`` over model variables."""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.k,):
            raise ValueError(f"alpha has shape {alpha.shape}, expected ({self.k},)")
        return np.asarray(self.matrix.T @ alpha).ravel()

    @classmethod
    def unit_rows(cls, columns: Sequence[int], n: int, names: Sequence[str] = ()) -> "SubobjectiveMatrix":
        k = len(columns)
        m = sp.csr_matrix((np.ones(k), (np.arange(k), np.asarray(columns, dtype=int))), shape=(k, n))
        return cls(m, tuple(names))


@dataclass(frozen=True)
class ForwardSolution:
    """An FOP solution together with its sub-objective image ``C y``.

    ``assignment`` is ``None`` for image-only inputs such as perturbed
    observations.  ``companions`` carries extra feasible images found during
    the same solve (ensemble members that were not the argmin); solvers add
    them to their pools.
    """

    sub_objective_image: np.ndarray
    assignment: np.ndarray | None = None
    proven_optimal: bool = True
    mip_gap: float = 0.0
    objective: float = float("nan")
    label: object = None
    companions: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self):
        img = np.asarray(self.sub_objective_image, dtype=float).ravel()
        img.setflags(write=False)
        object.__setattr__(self, "sub_objective_image", img)

    @property
    def image(self) -> np.ndarray:
        return self.sub_objective_image

    @classmethod
    def from_image(cls, image: Sequence[float], label: object = None) -> "ForwardSolution":
        return cls(np.asarray(image, dtype=float), label=label)


@dataclass
class OracleConfig:
    backend: str = "highs"
    mip_rel_gap: float = 0.0
    time_limit: float = math.inf
    threads: int = 1
    presolve: bool = True

    def __post_init__(self):
        if not 0.0 <= self.mip_rel_gap < 1.0:
            raise ValueError("mip_rel_gap must lie in [0, 1)")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.backend != "highs":
            raise ValueError(f"unknown backend {self.backend!r}; only 'highs' is available")

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> "OracleConfig":
        data = dict(data or {})
        allowed = {"backend", "mip_rel_gap", "time_limit", "threads", "presolve"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown oracle config keys: {sorted(unknown)}")
        if data.get("time_limit") is None:
            data.pop("time_limit", None)
        return cls(**data)


# --------------------------------------------------------------------- oracles
class ForwardOracle:
    """Exact FOP oracle backed by HiGHS through :func:`scipy.optimize.milp`.

    Not re-entrant; create one instance per worker.
    """

    def __init__(self, model: MilpModel, C: SubobjectiveMatrix, cfg: OracleConfig | None = None):
        if C.n != model.n_vars:
            raise ValueError(f"C has {C.n} columns but the model has {model.n_vars} variables")
        self.model = model
        self.C = C
        self.cfg = cfg or OracleConfig()
        self.n_solves = 0
        A = model.A
        self._constraints = LinearConstraint(A, model.row_lb, model.row_ub) if model.n_rows else None
        self._bounds = Bounds(model.lb, model.ub)
        self._integrality = model.integrality

    @property
    def k(self) -> int:
        return self.C.k

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        c = self.C.weighted(alpha)
        options = {"disp": False, "presolve": self.cfg.presolve, "mip_rel_gap": self.cfg.mip_rel_gap}
        if math.isfinite(self.cfg.time_limit):
            options["time_limit"] = float(self.cfg.time_limit)
        self.n_solves += 1
        res = milp(c, constraints=self._constraints, integrality=self._integrality,
                   bounds=self._bounds, options=options)
        if res.status == 2:
            raise InfeasibleForward(f"{self.model.name}: {res.message}")
        if res.status == 3:
            raise UnboundedForward(f"{self.model.name}: {res.message}")
        if res.status == 4 and res.x is None:
            msg = str(res.message).lower()
            if "unbounded" in msg:
                raise UnboundedForward(f"{self.model.name}: {res.message}")
            if "infeasible" in msg:
                raise InfeasibleForward(f"{self.model.name}: {res.message}")
            raise OracleError(f"{self.model.name}: {res.message}")
        sol = self._wrap(res, np.asarray(alpha, dtype=float), proven=res.status == 0)
        if res.status == 1:
            raise Timeout(f"{self.model.name}: {res.message}", incumbent=sol)
        return sol

    def _wrap(self, res, alpha: np.ndarray, proven: bool) -> ForwardSolution | None:
        if res.x is None:
            return None
        x = np.array(res.x, dtype=float)
        ints = self._integrality.astype(bool)
        x[ints] = np.round(x[ints])
        x = np.clip(x, self.model.lb, self.model.ub)
        image = self.C.image(x)
        gap = getattr(res, "mip_gap", None)
        return ForwardSolution(
            image, assignment=x, proven_optimal=proven,
            mip_gap=float(gap) if gap is not None and np.isfinite(gap) else 0.0,
            objective=float(alpha @ image),
        )


class EnumeratedOracle:
    """Exact oracle over an explicit finite list of feasible images.

    Ties are broken toward the lowest row index.  ``payload`` optionally
    holds one assignment per row.
    """

    def __init__(self, images: np.ndarray, payload: np.ndarray | None = None, tie_tol: float = 1e-12):
        self.images = np.atleast_2d(np.asarray(images, dtype=float))
        if self.images.shape[0] == 0:
            raise InfeasibleForward("empty feasible set")
        if payload is not None and len(payload) != len(self.images):
            raise ValueError("payload length does not match image count")
        self.payload = payload
        self.tie_tol = tie_tol
        self.n_solves = 0

    @property
    def k(self) -> int:
        return self.images.shape[1]

    def argmin(self, alpha: np.ndarray) -> int:
        vals = self.images @ np.asarray(alpha, dtype=float)
        best = vals.min()
        return int(np.flatnonzero(vals <= best + self.tie_tol * max(1.0, abs(best)))[0])

    def solve(self, alpha: np.ndarray) -> ForwardSolution:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.k,):
            raise ValueError(f"alpha has shape {alpha.shape}, expected ({self.k},)")
        self.n_solves += 1
        i = self.argmin(alpha)
        assignment = None if self.payload is None else np.asarray(self.payload[i])
        img = self.images[i]
        return ForwardSolution(img, assignment=assignment, objective=float(alpha @ img), label=i)


# ------------------------------------------------------------------ functions
def solve_weighted(model: MilpModel, C: SubobjectiveMatrix, alpha: np.ndarray,
                   cfg: OracleConfig | None = None) -> ForwardSolution:
    """Solve ``min alpha^T C y`` over ``model``."""
    return ForwardOracle(model, C, cfg).solve(alpha)


def generate_inverse_input(model: MilpModel, C: SubobjectiveMatrix, alpha: np.ndarray,
                           cfg: OracleConfig | None = None) -> ForwardSolution:
    """Forward-solve at a known weighting to produce an observed solution."""
    return solve_weighted(model, C, alpha, cfg)


def derive_subobjectives(model: MilpModel, k: int, seed: int) -> SubobjectiveMatrix:
    """Sample ``k`` distinct continuous variables; each becomes a unit sub-objective row."""
    cont = model.continuous_indices()
    if k < 1:
        raise ValueError("k must be positive")
    if len(cont) < k:
        raise ValueError(f"model has {len(cont)} continuous variables, fewer than k={k}")
    rng = np.random.default_rng(seed)
    cols = rng.choice(cont, size=k, replace=False)
    return SubobjectiveMatrix.unit_rows(cols, model.n_vars, [model.var_names[c] for c in cols])


def sample_simplex(k: int, seed: int | np.random.Generator) -> np.ndarray:
    """Uniform sample from the unit simplex by normalizing exponential draws."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    e = rng.standard_exponential(k)
    return e / e.sum()


# ------------------------------------------------------------------------ MPS
_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE", "OBJSENSE MAX",
             "OBJSENSE MIN"}
_UNSUPPORTED = {"QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX", "SOS", "CSECTION", "INDICATORS",
                "GENCONS", "PWLOBJ", "SC", "LAZYCONS", "USERCUTS", "SETS", "OBJSENSE_EXT", "OBJNAME"}


def load_mps(path: str | Path) -> MilpModel:
    """Read a free-format MPS file.

    Fixed-format files whose names contain no spaces parse identically.
    """
    path = Path(path)
    text = path.read_text()
    return parse_mps(text, name=path.stem)


def parse_mps(text: str, name: str = "model") -> MilpModel:
    section = None
    obj_row: str | None = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    cols: dict[str, dict[str, float]] = {}
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds: dict[str, list] = {}
    integer_mode = False
    model_name = name
    sense = 1
    saw_rows = saw_end = False

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        tok = line.split()
        if not raw[0].isspace():
            head = tok[0].upper()
            if head in _UNSUPPORTED:
                raise UnsupportedSectionError(head, ln)
            if head == "NAME":
                model_name = tok[1] if len(tok) > 1 else name
                section = "NAME"
                continue
            if head == "OBJSENSE":
                section = "OBJSENSE"
                if len(tok) > 1:
                    sense = _parse_objsense(tok[1], ln, raw)
                    section = None
                continue
            if head in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = head
                saw_rows |= head == "ROWS"
                continue
            if head == "ENDATA":
                saw_end = True
                break
            raise MpsParseError(f"unknown section {tok[0]}", ln, raw)
        if section == "OBJSENSE":
            sense = _parse_objsense(tok[0], ln, raw)
            continue
        if section == "ROWS":
            if len(tok) != 2:
                raise MpsParseError("ROWS entry needs type and name", ln, raw)
            t, r = tok[0].upper(), tok[1]
            if t not in ("N", "L", "G", "E"):
                raise MpsParseError(f"bad row type {t}", ln, raw)
            if r in row_sense:
                raise MpsParseError(f"duplicate row {r}", ln, raw)
            if t == "N":
                if obj_row is None:
                    obj_row = r
                row_sense[r] = "N"
                continue
            row_sense[r] = t
            row_order.append(r)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'\"").upper() == "MARKER":
                m = tok[2].strip("'\"").upper()
                if m == "INTORG":
                    integer_mode = True
                elif m == "INTEND":
                    integer_mode = False
                else:
                    raise MpsParseError(f"bad marker {tok[2]}", ln, raw)
                continue
            if len(tok) not in (3, 5):
                raise MpsParseError("COLUMNS entry needs name and row/value pairs", ln, raw)
            c = tok[0]
            if c not in cols:
                cols[c] = {}
                col_order.append(c)
                col_int[c] = integer_mode
            for r, v in zip(tok[1::2], tok[2::2]):
                if r not in row_sense:
                    raise MpsParseError(f"unknown row {r}", ln, raw)
                cols[c][r] = cols[c].get(r, 0.0) + _num(v, ln, raw)
        elif section in ("RHS", "RANGES"):
            body = tok[1:] if len(tok) % 2 == 1 else tok
            if len(body) < 2:
                raise MpsParseError(f"{section} entry needs row/value pairs", ln, raw)
            target = rhs if section == "RHS" else ranges
            for r, v in zip(body[0::2], body[1::2]):
                if r not in row_sense:
                    raise MpsParseError(f"unknown row {r}", ln, raw)
                target[r] = _num(v, ln, raw)
        elif section == "BOUNDS":
            t = tok[0].upper()
            no_value = t in ("FR", "MI", "PL", "BV")
            if no_value:
                if len(tok) == 2:
                    c, v = tok[1], None
                elif len(tok) == 3:
                    c, v = tok[2], None
                elif len(tok) == 4 and t == "BV":
                    c, v = tok[2], None
                else:
                    raise MpsParseError("malformed bound", ln, raw)
            else:
                if len(tok) == 4:
                    c, v = tok[2], _num(tok[3], ln, raw)
                elif len(tok) == 3:
                    c, v = tok[1], _num(tok[2], ln, raw)
                else:
                    raise MpsParseError("malformed bound", ln, raw)
            if t not in ("UP", "LO", "FX", "FR", "MI", "PL", "BV", "LI", "UI"):
                if t == "SC":
                    raise UnsupportedSectionError("BOUNDS SC", ln)
                raise MpsParseError(f"bad bound type {t}", ln, raw)
            if c not in cols:
                raise MpsParseError(f"bound on unknown column {c}", ln, raw)
            bounds.setdefault(c, []).append((t, v))
        elif section == "NAME":
            raise MpsParseError("unexpected data after NAME", ln, raw)
        else:
            raise MpsParseError("data line outside any section", ln, raw)

    if not saw_rows:
        raise MpsParseError("no ROWS section found", None)
    if not saw_end:
        raise MpsParseError("missing ENDATA", None)

    model = MilpModel(model_name)
    model.objective_sense = sense
    for c in col_order:
        is_int = col_int[c]
        kind = VarKind.INTEGER if is_int else VarKind.CONTINUOUS
        lb, ub = 0.0, math.inf
        for t, v in bounds.get(c, []):
            if t == "UP":
                ub = v
                if v < 0 and lb == 0.0:
                    lb = -math.inf
            elif t == "LO":
                lb = v
            elif t == "FX":
                lb = ub = v
            elif t == "FR":
                lb, ub = -math.inf, math.inf
            elif t == "MI":
                lb = -math.inf
            elif t == "PL":
                ub = math.inf
            elif t == "BV":
                kind, lb, ub = VarKind.BINARY, 0.0, 1.0
            elif t == "LI":
                kind, lb = VarKind.INTEGER, v
            elif t == "UI":
                kind, ub = VarKind.INTEGER, v
        obj = cols[c].get(obj_row, 0.0) if obj_row else 0.0
        model.add_var(c, kind, lb, ub, obj * sense)
    row_index = {r: i for i, r in enumerate(row_order)}
    entries: list[list[tuple[int, float]]] = [[] for _ in row_order]
    for j, c in enumerate(col_order):
        for r, v in cols[c].items():
            if r in row_index:
                entries[row_index[r]].append((j, v))
    for i, r in enumerate(row_order):
        b = rhs.get(r, 0.0)
        t = row_sense[r]
        row = model.add_constraint(entries[i], t, b, r)
        if r in ranges:
            R = ranges[r]
            if t == "L":
                lo, hi = b - abs(R), b
            elif t == "G":
                lo, hi = b, b + abs(R)
            else:
                lo, hi = (b, b + R) if R >= 0 else (b + R, b)
            model.set_row_bounds(row, lo, hi)
    return model


def _parse_objsense(token: str, ln: int, raw: str) -> int:
    t = token.upper()
    if t in ("MAX", "MAXIMIZE"):
        return -1
    if t in ("MIN", "MINIMIZE"):
        return 1
    raise MpsParseError(f"bad OBJSENSE {token}", ln, raw)


def _num(s: str, ln: int, raw: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise MpsParseError(f"not a number: {s}", ln, raw) from None


def _fmt(v: float) -> str:
    return repr(float(v))


def write_mps(model: MilpModel, path: str | Path) -> None:
    """Write ``model`` as free-format MPS (objective row ``obj``)."""
    lines = [f"NAME {model.name}", "ROWS", " N obj"]
    lo, hi = model.row_lb, model.row_ub
    kinds: list[str] = []
    rhs: list[tuple[str, float]] = []
    rng: list[tuple[str, float]] = []
    for r, name in enumerate(model.row_names):
        a, b = lo[r], hi[r]
        if a == b:
            kinds.append("E")
            rhs.append((name, a))
        elif math.isinf(a) and math.isinf(b):
            raise ValueError(f"row {name} is free")
        elif math.isinf(a):
            kinds.append("L")
            rhs.append((name, b))
        elif math.isinf(b):
            kinds.append("G")
            rhs.append((name, a))
        else:
            kinds.append("L")
            rhs.append((name, b))
            rng.append((name, b - a))
        lines.append(f" {kinds[-1]} {name}")
    lines.append("COLUMNS")
    A = model.A.tocsc()
    obj = model.objective
    in_int = False
    for j, cname in enumerate(model.var_names):
        is_int = model.kinds[j] is not VarKind.CONTINUOUS
        if is_int and not in_int:
            lines.append(" MARKER 'MARKER' 'INTORG'")
            in_int = True
        elif not is_int and in_int:
            lines.append(" MARKER 'MARKER' 'INTEND'")
            in_int = False
        if obj[j] != 0.0:
            lines.append(f" {cname} obj {_fmt(obj[j])}")
        col = A.getcol(j)
        wrote = obj[j] != 0.0
        for r, v in zip(col.indices, col.data):
            lines.append(f" {cname} {model.row_names[r]} {_fmt(v)}")
            wrote = True
        if not wrote:
            lines.append(f" {cname} obj 0.0")
    if in_int:
        lines.append(" MARKER 'MARKER' 'INTEND'")
    lines.append("RHS")
    for name, v in rhs:
        if v != 0.0:
            lines.append(f" rhs {name} {_fmt(v)}")
    if rng:
        lines.append("RANGES")
        for name, v in rng:
            lines.append(f" rng {name} {_fmt(v)}")
    lines.append("BOUNDS")
    for j, cname in enumerate(model.var_names):
        k = model.kinds[j]
        a, b = model.lb[j], model.ub[j]
        if k is VarKind.BINARY:
            lines.append(f" BV bnd {cname}")
            continue
        if a == b:
            lines.append(f" FX bnd {cname} {_fmt(a)}")
            continue
        if math.isinf(a) and math.isinf(b):
            lines.append(f" FR bnd {cname}")
            continue
        if math.isinf(a):
            lines.append(f" MI bnd {cname}")
        elif a != 0.0:
            lines.append(f" LO bnd {cname} {_fmt(a)}")
        if not math.isinf(b):
            lines.append(f" UP bnd {cname} {_fmt(b)}")
        elif k is VarKind.INTEGER:
            lines.append(f" PL bnd {cname}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")

"""Experiment configuration, the three experiment families, and CSV persistence.

A run is described by one YAML file with the sections ``experiment``,
``instances``, ``district``, ``solver``, ``ensemble``, ``oracle`` and
``output``; every key has a default so an empty file is a valid
(synthetic) districting config.  Records are written one task at a time
by a single writer, which is what makes ``--resume`` safe.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
import yaml

from .districting import (
    Districting,
    check_metrics,
    evaluate_metrics,
    load_plan,
    make_oracle,
)
from .ensembles import EnsembleSpec, solve_multipoint, solve_stochastic
from .gap_core import evaluate_gap
from .graphs import PlanarStateGraph, coarsen, generate_synthetic_state, load_state_graph, member_rng
from .model_io import (
    ForwardOracle,
    OracleConfig,
    derive_subobjectives,
    generate_inverse_input,
    load_mps,
    sample_simplex,
)
from .solvers import METHODS, SolverParams, solve

KINDS = ("miplib", "district-coarsen", "district-ensemble", "district-stochastic", "iowa")
DISTRICT_KINDS = KINDS[1:4]


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config
@dataclass
class ExperimentConfig:
    kind: str = "district-ensemble"
    seed: int = 0
    instances: list[str] = field(default_factory=list)
    graph: str | None = None
    plans: dict[str, str] = field(default_factory=dict)
    ks: list[int] = field(default_factory=lambda: [4, 8, 16, 32, 64, 128])
    samples: int = 3
    alpha_mode: str = "random"
    methods: list[str] = field(default_factory=lambda: ["cp", "pgd", "pgd_accel", "fw"])
    # synthetic districting grid
    n_states: int = 8
    state_size: int = 20
    n_weightings: int = 5
    L: int = 2
    metrics: list[str] = field(default_factory=lambda: ["rho", "sigma_A", "phi_EG"])
    perturbation: tuple[float, float] = (0.0375, 0.0625)
    heuristic_method: str = "pgd_accel"
    truth_method: str = "cp"
    # ensembles
    sizes: list[int] = field(default_factory=lambda: [1, 4, 16, 64])
    rounds: list[int] = field(default_factory=lambda: [1])
    schemes: list[str] = field(default_factory=lambda: ["random"])
    eta: float = 1.5
    K: int = 12
    n_rule: int | str = "increasing"
    momentum: float = 0.1
    members: int = 64
    backend: str = "auto"
    solver: SolverParams = field(default_factory=lambda: SolverParams(max_wall_seconds=360.0))
    oracle: OracleConfig = field(default_factory=OracleConfig)
    out: str | None = None
    workers: int = 1
    resume: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"experiment kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an explicit integer")
        bad = [m for m in self.methods + [self.heuristic_method, self.truth_method] if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if self.alpha_mode not in ("random", "uniform"):
            raise ConfigError("alpha_mode must be 'random' or 'uniform'")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        lo, hi = self.perturbation
        if not 0 <= lo <= hi:
            raise ConfigError("perturbation must be an increasing nonnegative range")
        check_metrics(self.metrics)
        if self.kind == "miplib":
            if not self.instances:
                raise ConfigError("miplib experiments need at least one MPS instance")
            for p in self.instances:
                if not Path(p).is_file():
                    raise ConfigError(f"instance {p} does not exist")
        if self.kind == "iowa":
            for p in [self.graph, *self.plans.values()]:
                if p is None or not Path(p).is_file():
                    raise ConfigError(f"iowa data file {p} is missing")
            if not self.plans:
                raise ConfigError("iowa analysis needs at least one districting plan")

    # ----------------------------------------------------------- (de)serialize
    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any] | None, overrides: Mapping[str, Any] | None = None
                     ) -> "ExperimentConfig":
        raw = dict(raw or {})
        known = {"experiment", "instances", "district", "solver", "ensemble", "oracle", "output"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        kw: dict[str, Any] = {}
        kw.update(raw.get("experiment") or {})
        inst = raw.get("instances")
        if isinstance(inst, Mapping):
            kw["graph"] = inst.get("graph")
            kw["plans"] = dict(inst.get("plans") or {})
            kw["instances"] = list(inst.get("mps") or [])
        elif inst is not None:
            kw["instances"] = list(inst)
        kw.update(raw.get("district") or {})
        kw.update(raw.get("ensemble") or {})
        out = raw.get("output") or {}
        if "dir" in out:
            kw["out"] = out["dir"]
        if "resume" in out:
            kw["resume"] = bool(out["resume"])
        solver = dict(raw.get("solver") or {})
        oracle = dict(raw.get("oracle") or {})
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        if "time_limit" in overrides:
            solver["max_wall_seconds"] = float(overrides.pop("time_limit"))
        if "time_limit" in solver:
            solver["max_wall_seconds"] = float(solver.pop("time_limit"))
        if "method" in overrides:
            m = overrides.pop("method")
            overrides["methods"] = [m]
            overrides["heuristic_method"] = m
        if "k" in overrides:
            overrides["ks"] = [int(overrides.pop("k"))]
        kw.update(overrides)
        fields_ = {f.name for f in dataclasses.fields(cls)}
        stray = set(kw) - fields_
        if stray:
            raise ConfigError(f"unknown config keys {sorted(stray)}")
        solver.setdefault("max_wall_seconds", 360.0)
        try:
            kw["solver"] = SolverParams(**solver)
            kw["oracle"] = OracleConfig.from_mapping(oracle)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if "perturbation" in kw:
            kw["perturbation"] = tuple(float(x) for x in kw["perturbation"])
        for key in ("ks", "sizes", "rounds"):
            if key in kw:
                kw[key] = [int(x) for x in kw[key]]
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> "ExperimentConfig":
        raw: dict = {}
        if path is not None:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(raw, overrides)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["solver"] = dataclasses.asdict(self.solver)
        d["oracle"] = dataclasses.asdict(self.oracle)
        d["perturbation"] = list(self.perturbation)
        return json.loads(json.dumps(d, default=_jsonable))


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


# ------------------------------------------------------------------ records
@dataclass
class RunRecord:
    experiment: str
    instance: str
    method: str
    k: int
    seed: int
    sample: int = 0
    variant: str = ""
    status: str = "ok"
    terminated_by: str = ""
    wall_seconds: float = math.nan
    iterations: int = 0
    fop_solves: int = 0
    xi_star: float = math.nan
    alpha_star: list[float] = field(default_factory=list)
    xi_gap_to_optimum: float = math.nan
    alpha_distance: float = math.nan
    error: str = ""

    @property
    def key(self) -> tuple:
        return (self.experiment, self.instance, self.method, self.k, self.seed, self.sample, self.variant)

    @property
    def task_key(self) -> tuple:
        return (self.experiment, self.instance, self.k, self.seed, self.sample)

    def comparable(self) -> dict:
        """Every field except wall-clock time; NaN becomes None so equal records compare equal."""
        d = dataclasses.asdict(self)
        d.pop("wall_seconds")
        return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in d.items()}

    def to_row(self) -> dict[str, str]:
        row = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            row[f.name] = json.dumps([float(x) for x in v]) if f.name == "alpha_star" else repr(v) if \
                isinstance(v, float) else str(v)
        return row

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "RunRecord":
        kw: dict[str, Any] = {}
        for f in dataclasses.fields(cls):
            s = row[f.name]
            if f.name == "alpha_star":
                kw[f.name] = json.loads(s) if s else []
            elif f.type in ("int",):
                kw[f.name] = int(s)
            elif f.type in ("float",):
                kw[f.name] = float(s)
            else:
                kw[f.name] = s
        return cls(**kw)


CSV_COLUMNS = [f.name for f in dataclasses.fields(RunRecord)]


class RecordWriter:
    """Appends records to one CSV; the only code that touches the file."""

    def __init__(self, path: str | Path, resume: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.done: set[tuple] = set()
        if resume and self.path.exists():
            for rec in read_records(self.path):
                self.done.add(rec.task_key)
        else:
            with open(self.path, "w", newline="") as fh:
                csv.DictWriter(fh, CSV_COLUMNS).writeheader()

    def write(self, records: Sequence[RunRecord]) -> None:
        with open(self.path, "a", newline="") as fh:
            w = csv.DictWriter(fh, CSV_COLUMNS)
            for r in records:
                w.writerow(r.to_row())
        self.done.update(r.task_key for r in records)


def read_records(path: str | Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        return [RunRecord.from_row(row) for row in csv.DictReader(fh)]


def _result_record(experiment: str, instance: str, method: str, k: int, seed: int, sample: int, res,
                   variant: str = "") -> RunRecord:
    return RunRecord(experiment, instance, method, k, seed, sample, variant, "ok", res.terminated_by,
                     float(res.wall_seconds), int(res.iterations), int(res.fop_solves), float(res.xi_star),
                     [float(a) for a in res.alpha_star])


# ---------------------------------------------------------------- execution
def _run_tasks(cfg: ExperimentConfig, tasks: list[tuple[tuple, tuple]], worker: Callable[..., list[RunRecord]],
               csv_name: str) -> list[RunRecord]:
    """Run ``worker(cfg, *args)`` for every ``(task_key, args)`` in order, through one writer."""
    writer = None
    if cfg.out is not None:
        out = Path(cfg.out)
        writer = RecordWriter(out / csv_name, resume=cfg.resume)
        with open(out / (Path(csv_name).stem + ".config.json"), "w") as fh:
            json.dump(cfg.to_dict(), fh, indent=2)
    todo = [args for key, args in tasks if writer is None or key not in writer.done]
    results: list[RunRecord] = []
    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            # map() yields in submission order, so output order matches a serial run
            for batch in pool.map(worker, [cfg] * len(todo), *zip(*todo)):
                if writer is not None:
                    writer.write(batch)
                results.extend(batch)
    else:
        for args in todo:
            batch = worker(cfg, *args)
            if writer is not None:
                writer.write(batch)
            results.extend(batch)
    return results


def _seed_int(seed: int, *keys: int) -> int:
    return int(member_rng(seed, *keys).integers(2**31 - 1))


# ------------------------------------------------------------------- MIPLIB
@lru_cache(maxsize=8)
def _model(path: str):
    return load_mps(path)


def miplib_task(cfg: ExperimentConfig, instance: str, k: int, sample: int) -> list[RunRecord]:
    name = Path(instance).stem
    seed = cfg.seed
    try:
        model = _model(instance)
        C = derive_subobjectives(model, k, _seed_int(seed, k))
        alpha = np.full(k, 1.0 / k) if cfg.alpha_mode == "uniform" else sample_simplex(
            k, member_rng(seed, k, sample))
        y_hat = generate_inverse_input(model, C, alpha, cfg.oracle)
    except Exception as exc:  # noqa: BLE001 - recorded, run continues
        return [RunRecord("miplib", name, m, k, seed, sample, status="failed", error=f"{type(exc).__name__}: {exc}")
                for m in cfg.methods]
    out = []
    for m in cfg.methods:
        try:
            res = solve(m, ForwardOracle(model, C, cfg.oracle), y_hat, cfg.solver)
            out.append(_result_record("miplib", name, m, k, seed, sample, res))
        except Exception as exc:  # noqa: BLE001
            out.append(RunRecord("miplib", name, m, k, seed, sample, status="failed",
                                 error=f"{type(exc).__name__}: {exc}"))
    return out


def run_miplib_bench(cfg: ExperimentConfig) -> list[RunRecord]:
    """Four-method comparison on MPS instances with sampled unit sub-objectives."""
    if cfg.kind != "miplib":
        cfg = dataclasses.replace(cfg, kind="miplib")
    tasks = [(("miplib", Path(p).stem, k, cfg.seed, s), (p, k, s))
             for p in cfg.instances for k in cfg.ks for s in range(cfg.samples)]
    return _run_tasks(cfg, tasks, miplib_task, "miplib.csv")


# -------------------------------------------------------------- districting
@dataclass(frozen=True)
class DistrictInstance:
    state: int
    weighting: int
    graph: PlanarStateGraph
    alpha_true: np.ndarray
    y_hat: np.ndarray

    @property
    def name(self) -> str:
        return f"state{self.state}-w{self.weighting}"


def district_instance(cfg: ExperimentConfig, state: int, weighting: int) -> DistrictInstance:
    """Synthetic state ``state`` observed under perturbed weighting ``weighting``."""
    graph = generate_synthetic_state(cfg.state_size, _seed_int(cfg.seed, state))
    full = _full_oracle(cfg, graph)
    k = len(cfg.metrics)
    alpha = sample_simplex(k, member_rng(cfg.seed, state, weighting, 1))
    lo, hi = cfg.perturbation
    noise = member_rng(cfg.seed, state, weighting, 2).uniform(lo, hi, size=k)
    y_hat = full.solve(alpha).sub_objective_image + noise
    return DistrictInstance(state, weighting, graph, alpha, y_hat)


_FULL_ORACLES: dict[str, Any] = {}
_TRUTH_MEMO: dict[str, tuple[np.ndarray, float]] = {}


def _content_key(*parts: Any) -> str:
    blob = json.dumps(parts, sort_keys=True, default=_jsonable).encode()
    return hashlib.sha256(blob).hexdigest()


def _full_oracle(cfg: ExperimentConfig, graph: PlanarStateGraph):
    key = _content_key(graph.to_dict(), cfg.L, list(cfg.metrics), cfg.backend)
    if key not in _FULL_ORACLES:
        if len(_FULL_ORACLES) > 16:
            _FULL_ORACLES.clear()
        _FULL_ORACLES[key] = make_oracle(graph, cfg.L, cfg.metrics, cfg.backend, cfg.oracle)
    return _FULL_ORACLES[key]


def ground_truth(cfg: ExperimentConfig, inst: DistrictInstance) -> tuple[np.ndarray, float]:
    """Full-graph minimizer and gap, cached on disk under a content hash."""
    key = _content_key(inst.graph.to_dict(), inst.y_hat, cfg.L, list(cfg.metrics), cfg.truth_method)
    if key in _TRUTH_MEMO:
        return _TRUTH_MEMO[key]
    path = Path(cfg.out) / "truth-cache" / f"{key}.json" if cfg.out is not None else None
    if path is not None and path.exists():
        with open(path) as fh:
            raw = json.load(fh)
        val = (np.array(raw["alpha"]), float(raw["xi"]))
    else:
        res = solve(cfg.truth_method, _full_oracle(cfg, inst.graph), inst.y_hat,
                    dataclasses.replace(cfg.solver, max_wall_seconds=math.inf))
        val = (res.alpha_star, float(res.xi_star))
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as fh:
                json.dump({"alpha": val[0].tolist(), "xi": val[1], "terminated_by": res.terminated_by}, fh)
    _TRUTH_MEMO[key] = val
    return val


def _score(cfg: ExperimentConfig, inst: DistrictInstance, rec: RunRecord, alpha_star: np.ndarray,
           xi_opt: float) -> RunRecord:
    a = np.asarray(rec.alpha_star)
    xi_full = evaluate_gap(_full_oracle(cfg, inst.graph), inst.y_hat, a).xi
    rec.xi_gap_to_optimum = float(xi_full - xi_opt)
    rec.alpha_distance = float(np.linalg.norm(a - alpha_star))
    return rec


def district_task(cfg: ExperimentConfig, state: int, weighting: int) -> list[RunRecord]:
    kind = cfg.kind
    k = len(cfg.metrics)
    name = f"state{state}-w{weighting}"
    sample = state * 1000 + weighting
    try:
        inst = district_instance(cfg, state, weighting)
        a_star, xi_opt = ground_truth(cfg, inst)
    except Exception as exc:  # noqa: BLE001
        return [RunRecord(kind, name, cfg.heuristic_method, k, cfg.seed, sample, status="failed",
                          error=f"{type(exc).__name__}: {exc}")]
    method = cfg.heuristic_method
    out: list[RunRecord] = []

    def failed(variant: str, exc: Exception) -> RunRecord:
        return RunRecord(kind, name, method, k, cfg.seed, sample, variant, "failed",
                         error=f"{type(exc).__name__}: {exc}")

    if kind == "district-coarsen":
        for scheme in cfg.schemes:
            for r in cfg.rounds:
                variant = f"{scheme}:rounds={r}"
                try:
                    coarse = coarsen(inst.graph, r, scheme, member_rng(cfg.seed, state, weighting, 3, r))
                    res = solve(method, make_oracle(coarse, cfg.L, cfg.metrics, cfg.backend, cfg.oracle),
                                inst.y_hat, cfg.solver)
                    out.append(_score(cfg, inst, _result_record(kind, name, method, k, cfg.seed, sample, res,
                                                                variant), a_star, xi_opt))
                except Exception as exc:  # noqa: BLE001
                    out.append(failed(variant, exc))
    elif kind == "district-ensemble":
        for r in cfg.rounds:
            spec = EnsembleSpec(inst.graph, max(cfg.sizes), cfg.L, tuple(cfg.metrics), r, cfg.schemes[0],
                                _seed_int(cfg.seed, state, weighting, 4, r), cfg.eta, backend=cfg.backend,
                                oracle_cfg=cfg.oracle)
            for n in cfg.sizes:
                variant = f"n={n}:rounds={r}"
                try:
                    res = solve_multipoint(spec.subset(n), inst.y_hat, method, cfg.solver)
                    out.append(_score(cfg, inst, _result_record(kind, name, method, k, cfg.seed, sample, res,
                                                                variant), a_star, xi_opt))
                except Exception as exc:  # noqa: BLE001
                    out.append(failed(variant, exc))
    elif kind == "district-stochastic":
        try:
            res = solve_stochastic(inst.graph, cfg.L, cfg.metrics, inst.y_hat, cfg.n_rule, cfg.K, cfg.solver,
                                   _seed_int(cfg.seed, state, weighting, 5), cfg.rounds[0], cfg.schemes[0],
                                   cfg.momentum, backend=cfg.backend)
        except Exception as exc:  # noqa: BLE001
            return [failed("stochastic", exc)]
        full = _full_oracle(cfg, inst.graph)
        for c, a in sorted(res.checkpoints.items()):
            rec = RunRecord(kind, name, "stochastic", k, cfg.seed, sample, f"iter={c}", "ok", res.terminated_by,
                            float(res.wall_seconds), int(c), int(sum(t.pool_size for t in res.trace[:c])),
                            float(evaluate_gap(full, inst.y_hat, a).xi), [float(x) for x in a])
            out.append(_score(cfg, inst, rec, a_star, xi_opt))
    else:
        raise ConfigError(f"{kind!r} is not a districting experiment")
    return out


def run_district_experiments(cfg: ExperimentConfig) -> list[RunRecord]:
    """Synthetic-state grid: ground truth on the full graph, then one heuristic family."""
    if cfg.kind not in DISTRICT_KINDS:
        raise ConfigError(f"kind must be one of {DISTRICT_KINDS}")
    k = len(cfg.metrics)
    tasks = [((cfg.kind, f"state{s}-w{w}", k, cfg.seed, s * 1000 + w), (s, w))
             for s in range(cfg.n_states) for w in range(cfg.n_weightings)]
    return _run_tasks(cfg, tasks, district_task, f"{cfg.kind}.csv")


def median_by_variant(records: Iterable[RunRecord], field_name: str = "alpha_distance") -> dict[str, float]:
    groups: dict[str, list[float]] = {}
    for r in records:
        if r.status == "ok":
            groups.setdefault(r.variant, []).append(getattr(r, field_name))
    return {v: float(np.median(x)) for v, x in groups.items()}


def ensemble_trend(records: Iterable[RunRecord]) -> dict:
    """Median ``alpha_distance`` per ensemble size and whether it never increases."""
    med = median_by_variant(records)
    sizes = sorted(med, key=lambda v: int(v.split(":")[0].split("=")[1]))
    vals = [med[v] for v in sizes]
    return {"medians": {v: med[v] for v in sizes},
            "non_increasing": bool(all(b <= a for a, b in zip(vals, vals[1:]))),
            "largest_below_smallest": bool(len(vals) > 1 and vals[-1] < vals[0])}


# --------------------------------------------------------------------- Iowa
def run_iowa_analysis(cfg: ExperimentConfig) -> dict:
    """Metric table for each plan and the two ensemble inverse analyses.

    Analysis 1 uses (rho, sigma_P, phi_EG); analysis 2 replaces the
    efficiency gap by its signed version.  Each plan's own metric vector is
    the observation.
    """
    if cfg.graph is None or not Path(cfg.graph).is_file():
        raise FileNotFoundError(f"state graph {cfg.graph} not found")
    graph = load_state_graph(cfg.graph)
    plans: dict[str, Districting] = {}
    for name, path in cfg.plans.items():
        if not Path(path).is_file():
            raise FileNotFoundError(f"plan {name} at {path} not found")
        plans[name] = load_plan(path, graph)
    if not plans:
        raise ConfigError("no districting plans given")
    report: dict[str, Any] = {"metrics": {}, "analyses": {}}
    for name, plan in plans.items():
        report["metrics"][name] = evaluate_metrics(graph, plan).as_dict()
    analyses = {"analysis1": ("rho", "sigma_P", "phi_EG"),
                "analysis2": ("rho", "sigma_P", "phi_EG_directional")}
    for aname, metrics in analyses.items():
        report["analyses"][aname] = {}
        for name, plan in plans.items():
            y_hat = evaluate_metrics(graph, plan).select(metrics)
            spec = EnsembleSpec(graph, cfg.members, plan.L, metrics, max(cfg.rounds), cfg.schemes[0], cfg.seed,
                                cfg.eta, backend=cfg.backend, oracle_cfg=cfg.oracle)
            t0 = time.perf_counter()
            res = solve_multipoint(spec, y_hat, "pgd_accel", cfg.solver)
            report["analyses"][aname][name] = {
                "metrics": list(metrics),
                "weights": dict(zip(metrics, map(float, res.alpha_star))),
                "gap": float(res.xi_star),
                "observed": dict(zip(metrics, map(float, y_hat))),
                "terminated_by": res.terminated_by,
                "fop_solves": int(res.fop_solves),
                "wall_seconds": time.perf_counter() - t0,
            }
    if cfg.out is not None:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        with open(Path(cfg.out) / "iowa.json", "w") as fh:
            json.dump(report, fh, indent=2)
        with open(Path(cfg.out) / "iowa.config.json", "w") as fh:
            json.dump(cfg.to_dict(), fh, indent=2)
    return report


def run_experiment(cfg: ExperimentConfig):
    if cfg.kind == "miplib":
        return run_miplib_bench(cfg)
    if cfg.kind == "iowa":
        return run_iowa_analysis(cfg)
    return run_district_experiments(cfg)

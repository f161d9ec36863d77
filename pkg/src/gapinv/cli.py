"""``gapinv`` command line.

Exit status: 0 on success, 2 when some records failed but the run
finished, 1 on a fatal error (bad config, missing data, crash).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .districting import evaluate_metrics, load_plan, make_oracle
from .ensembles import EnsembleSpec, solve_multipoint
from .graphs import coarsen, generate_synthetic_state, load_state_graph, save_state_graph
from .model_io import ForwardOracle, OracleConfig, SubobjectiveMatrix, derive_subobjectives, load_mps
from .solvers import METHODS, SolverParams, solve

log = logging.getLogger("gapinv")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--time-limit", type=float, help="wall-clock cap per inverse solve (s)")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--resume", action="store_true", default=None, help="skip tasks already in the CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gapinv", description=__doc__.splitlines()[0])
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[verbose])

    p = command("bench-miplib", help="four-method comparison on MPS instances")
    _common(p)
    p.add_argument("--k", type=int, help="single sub-objective count")
    p.add_argument("instances", nargs="*", help="MPS files (replace the config's list)")

    p = command("bench-district", help="synthetic districting experiments")
    _common(p)
    p.add_argument("--kind", choices=bench.DISTRICT_KINDS)

    p = command("analyze-iowa", help="metric table and ensemble analyses for real plans")
    _common(p)
    p.add_argument("--graph", type=str)
    p.add_argument("--plan", action="append", default=[], metavar="NAME=PATH")

    p = command("coarsen", help="coarsen a state graph and write it out")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", type=Path)
    src.add_argument("--synthetic", type=int, metavar="N", help="generate an N-vertex synthetic state")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--scheme", choices=("random", "population"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)

    p = command("solve", help="one inverse solve from files")
    p.add_argument("--method", choices=METHODS, default="pgd_accel")
    p.add_argument("--time-limit", type=float, default=360.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    g = p.add_argument_group("MILP input")
    g.add_argument("--mps", type=Path)
    g.add_argument("--columns", help="comma-separated variable names, one sub-objective each")
    g.add_argument("--k", type=int, help="sample k continuous variables instead of --columns")
    g.add_argument("--observed", type=Path, help="JSON: image list or {variable: value}")
    g = p.add_argument_group("districting input")
    g.add_argument("--graph", type=Path)
    g.add_argument("--plan", type=Path)
    g.add_argument("--metrics", default="rho,sigma_P,phi_EG")
    g.add_argument("--ensemble", type=int, default=0, help="members (0: solve on the full graph)")
    g.add_argument("--rounds", type=int, default=1)
    return ap


def _overrides(args: argparse.Namespace, *names: str) -> dict:
    return {n: getattr(args, n, None) for n in names}


def _finish(records) -> int:
    failed = [r for r in records if r.status != "ok"]
    for r in failed:
        log.warning("failed: %s %s k=%s sample=%s: %s", r.instance, r.method, r.k, r.sample, r.error)
    log.info("%d records, %d failed", len(records), len(failed))
    return 2 if failed else 0


def cmd_bench_miplib(args) -> int:
    ov = _overrides(args, "seed", "method", "time_limit", "workers", "out", "resume", "k")
    ov["kind"] = "miplib"
    if args.instances:
        ov["instances"] = list(args.instances)
    cfg = bench.ExperimentConfig.load(args.config, ov)
    return _finish(bench.run_miplib_bench(cfg))


def cmd_bench_district(args) -> int:
    ov = _overrides(args, "seed", "method", "time_limit", "workers", "out", "resume")
    if args.kind:
        ov["kind"] = args.kind
    cfg = bench.ExperimentConfig.load(args.config, ov)
    if cfg.kind not in bench.DISTRICT_KINDS:
        raise bench.ConfigError(f"config kind {cfg.kind!r} is not a districting experiment; pass --kind")
    records = bench.run_district_experiments(cfg)
    if cfg.kind == "district-ensemble":
        trend = bench.ensemble_trend(records)
        print(json.dumps(trend, indent=2))
        if cfg.out:
            with open(Path(cfg.out) / "district-ensemble.trend.json", "w") as fh:
                json.dump(trend, fh, indent=2)
    else:
        print(json.dumps(bench.median_by_variant(records), indent=2))
    return _finish(records)


def cmd_analyze_iowa(args) -> int:
    ov = _overrides(args, "seed", "time_limit", "workers", "out")
    ov["kind"] = "iowa"
    if args.graph:
        ov["graph"] = args.graph
    if args.plan:
        ov["plans"] = dict(p.split("=", 1) for p in args.plan)
    cfg = bench.ExperimentConfig.load(args.config, ov)
    report = bench.run_iowa_analysis(cfg)
    print(json.dumps(report, indent=2))
    return 0


def cmd_coarsen(args) -> int:
    graph = load_state_graph(args.graph) if args.graph else generate_synthetic_state(args.synthetic, args.seed)
    coarse = coarsen(graph, args.rounds, args.scheme, args.seed)
    print(f"{graph.n} vertices / {graph.m} edges -> {coarse.n} vertices / {coarse.m} edges")
    if args.out:
        save_state_graph(coarse, args.out)
    return 0


def _load_observed(path: Path, model, C: SubobjectiveMatrix) -> np.ndarray:
    with open(path) as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        y = np.zeros(model.n_vars)
        for name, v in raw.items():
            y[model.index(name)] = float(v)
        return C.image(y)
    return np.asarray(raw, dtype=float)


def cmd_solve(args) -> int:
    params = SolverParams(max_wall_seconds=args.time_limit)
    if args.mps:
        model = load_mps(args.mps)
        if args.columns:
            cols = [model.index(c.strip()) for c in args.columns.split(",")]
            C = SubobjectiveMatrix.unit_rows(cols, model.n_vars, [model.var_names[c] for c in cols])
        elif args.k:
            C = derive_subobjectives(model, args.k, args.seed)
        else:
            raise SystemExit("solve: --mps needs --columns or --k")
        if not args.observed:
            raise SystemExit("solve: --mps needs --observed")
        y_hat = _load_observed(args.observed, model, C)
        res = solve(args.method, ForwardOracle(model, C, OracleConfig()), y_hat, params)
        names = C.names
    elif args.graph and args.plan:
        graph = load_state_graph(args.graph)
        plan = load_plan(args.plan, graph)
        metrics = tuple(m.strip() for m in args.metrics.split(","))
        y_hat = evaluate_metrics(graph, plan).select(metrics)
        if args.ensemble > 0:
            spec = EnsembleSpec(graph, args.ensemble, plan.L, metrics, args.rounds, seed=args.seed)
            res = solve_multipoint(spec, y_hat, args.method, params)
        else:
            res = solve(args.method, make_oracle(graph, plan.L, metrics), y_hat, params)
        names = list(metrics)
    else:
        raise SystemExit("solve: give --mps/--observed or --graph/--plan")
    out = {"method": res.method, "weights": dict(zip(names, map(float, res.alpha_star))), "xi": res.xi_star,
           "terminated_by": res.terminated_by, "iterations": res.iterations, "fop_solves": res.fop_solves,
           "wall_seconds": res.wall_seconds}
    text = json.dumps(out, indent=2)
    if args.out:
        args.out.write_text(text)
    print(text)
    return 0


COMMANDS = {
    "bench-miplib": cmd_bench_miplib,
    "bench-district": cmd_bench_district,
    "analyze-iowa": cmd_analyze_iowa,
    "coarsen": cmd_coarsen,
    "solve": cmd_solve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        raise
    except Exception as exc:  # noqa: BLE001 - top-level fatal handler
        log.debug("fatal", exc_info=True)
        print(f"gapinv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: reproducible experiments with machine-readable reports.

Subcommands: ingest, walks, ppr, cluster, compare-baseline, oracle-check.
Every run command requires --seed; every JSON report embeds the resolved
configuration, the seed, and the package version, so re-running a report's
config reproduces it byte-identically. Exit codes: 0 success, 1 algorithmic
failure (abort-mode stitch failure), 2 usage or parse error, 3 capacity
violation in strict mode.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from . import __version__, fixtures, oracle
from .engine import (EngineError, ParameterError, RunResult, StitchFailure,
                     StitchParams, desk_params, run_budgeted, run_multi_source,
                     theory_params, uniform_stitching, validate_walks)
from .graph import (EdgeListParseError, Graph, GraphError, load_cache,
                    load_edge_list, save_cache)
from .mpc import CapacityError, Cluster, ClusterConfig
from .ppr import (PPRError, PPRParams, WalkBatch, approx_ppr, local_cluster)

EXIT_OK = 0
EXIT_ALGO = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3


class UsageError(ValueError):
    pass


# -- config plumbing ---------------------------------------------------------

def read_config_file(path: str) -> Dict[str, str]:
    """Flat key=value file; blank lines and '#' comments ignored."""
    out: Dict[str, str] = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def resolved_config(args: argparse.Namespace) -> Dict[str, object]:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_report(path: str | None, payload: dict, args: argparse.Namespace,
                 wall_clock: float | None = None) -> dict:
    report = {
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": resolved_config(args),
    }
    report.update(payload)
    if wall_clock is not None and getattr(args, "timings", False):
        report["wall_clock_sec"] = wall_clock
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if wall_clock is not None and not getattr(args, "timings", False):
        print(f"wall clock: {wall_clock:.2f}s", file=sys.stderr)
    return report


def load_graph(path: str) -> Graph:
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == b"LWG1":
        return load_cache(path)
    with open(path) as f:
        return load_edge_list(f)


# -- walk files --------------------------------------------------------------

def write_walk_file(path: str, run: RunResult) -> None:
    """One walk per line: "root cycle status v0 v1 ... vl",
    status ok or failed@k for walks whose continuation at label k ran dry."""
    cycle = run.metrics.cycles
    with open(path, "w") as f:
        for row in run.walks:
            f.write(f"{row[0]} {cycle} ok " + " ".join(str(v) for v in row) + "\n")
        for phase, chunk in run.failed_walks:
            k = (1 << (phase - 1)) + 1
            for row in chunk:
                f.write(f"{row[0]} {cycle} failed@{k} "
                        + " ".join(str(v) for v in row) + "\n")


def read_walk_file(path: str, root: int | None = None) -> np.ndarray:
    """Rows of ok walks (optionally restricted to one root)."""
    rows: List[List[int]] = []
    width = None
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) < 4:
                raise UsageError(f"{path}:{lineno}: malformed walk line")
            if toks[2] != "ok":
                continue
            if root is not None and int(toks[0]) != root:
                continue
            verts = [int(t) for t in toks[3:]]
            if width is None:
                width = len(verts)
            elif len(verts) != width:
                raise UsageError(f"{path}:{lineno}: inconsistent walk length")
            rows.append(verts)
    if not rows:
        raise UsageError(f"{path}: no usable walks" +
                         (f" for root {root}" if root is not None else ""))
    return np.asarray(rows, dtype=np.int64)


# -- shared parameter assembly ----------------------------------------------

def make_cluster(args) -> Cluster:
    return Cluster(ClusterConfig(num_machines=args.machines,
                                 machine_capacity=args.capacity,
                                 enforce_capacity=args.strict))


def make_stitch_params(args, g: Graph) -> StitchParams:
    if args.param_mode == "theory":
        return theory_params(g.n, args.length, args.growth, args.confidence,
                             target=args.target, scale=args.scale,
                             laziness=args.laziness, fail_policy=args.fail_policy)
    return desk_params(length=args.length, target=args.target, growth=args.growth,
                       threshold=args.theta, base_budget=args.b0, tau=args.tau,
                       laziness=args.laziness, fail_policy=args.fail_policy,
                       mode=args.mode)


def add_graph_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge-list file or LWG1 cache")


def add_cluster_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--machines", type=int, default=1)
    p.add_argument("--capacity", type=int, default=1 << 62,
                   help="words per machine per round")
    p.add_argument("--strict", action="store_true",
                   help="abort on capacity violation instead of recording it")


def add_engine_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--length", type=int, default=8, help="walk length (rounded to 2^j)")
    p.add_argument("--target", type=int, default=1000, help="rooted walks wanted")
    p.add_argument("--growth", type=float, default=10.0)
    p.add_argument("--param-mode", choices=("desk", "theory"), default="desk")
    p.add_argument("--theta", type=float, default=100.0)
    p.add_argument("--b0", type=float, default=20.0)
    p.add_argument("--tau", type=float, default=1.4)
    p.add_argument("--confidence", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--mode", choices=("theory", "practical"), default="practical",
                   help="bucketed vs pooled serving (desk param-mode only)")
    p.add_argument("--laziness", choices=("none", "half"), default="none")
    p.add_argument("--fail-policy", choices=("abort", "tolerate"), default="tolerate")


# -- subcommands --------------------------------------------------------------

def cmd_ingest(args) -> int:
    with open(args.edge_list) as f:
        g = load_edge_list(f)
    save_cache(g, args.cache)
    print(f"n={g.n} m={g.m}")
    return EXIT_OK


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def cmd_walks(args) -> int:
    g = load_graph(args.graph)
    cluster = make_cluster(args)
    params = make_stitch_params(args, g)
    t0 = time.perf_counter()
    if args.budgets:
        budgets: Dict[int, int] = {}
        with open(args.budgets) as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                toks = line.split()
                if len(toks) != 2:
                    raise UsageError(f"{args.budgets}:{lineno}: expected 'vertex budget'")
                budgets[int(toks[0])] = int(toks[1])
        multi = run_multi_source(g, budgets, params, cluster=cluster, seed=args.seed)
        wall = time.perf_counter() - t0
        if args.out:
            cycles_of = {}
            for res in multi.group_results:
                for r in res.roots:
                    cycles_of[r] = res.metrics.cycles
            with open(args.out, "w") as f:
                for root in sorted(multi.walks_by_root):
                    for row in multi.walks_by_root[root]:
                        f.write(f"{root} {cycles_of[root]} ok "
                                + " ".join(str(v) for v in row) + "\n")
        payload = {
            "metrics": multi.metrics.to_dict(),
            "shortfall": {str(k): v for k, v in sorted(multi.shortfall.items())},
            "walks_per_root": {str(k): int(multi.walks_by_root[k].shape[0])
                               for k in sorted(multi.walks_by_root)},
        }
        write_report(args.report, payload, args, wall)
        return EXIT_OK

    if args.root is None:
        raise UsageError("need --root (or --budgets for multi-source)")
    run = run_budgeted(g, args.root, params, cluster=cluster, seed=args.seed)
    wall = time.perf_counter() - t0
    if args.out:
        write_walk_file(args.out, run)
    if args.dump_budgets:
        # budgets of the final cycle, recomputed for the dump
        rerun = run_budgeted(g, args.root, params, cluster=Cluster(cluster.cfg),
                             seed=args.seed, keep_history=True)
        with open(args.dump_budgets, "w") as f:
            for line in rerun.budget_history[-1].csv_lines():
                f.write(line + "\n")
    if args.csv:
        _write_csv(args.csv,
                   "cycle,budget_total,rooted_attempted,rooted_ok,failure_rate",
                   ((s.cycle, s.budget_total, s.rooted_attempted, s.rooted_ok,
                     s.failure_rate) for s in run.cycle_stats))
    payload = {"metrics": run.metrics.to_dict(),
               "walks_ok": int(run.walks.shape[0]),
               "walks_valid": validate_walks(g, run.walks, params.lazy)}
    write_report(args.report, payload, args, wall)
    return EXIT_OK


def cmd_ppr(args) -> int:
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    if args.ppr_mode == "theory":
        if args.eta is None:
            raise UsageError("theory mode needs --eta")
        pparams = PPRParams.theory(g.n, args.alpha, args.eta)
    else:
        pparams = PPRParams.desk(args.alpha, args.T, args.M, eta=args.eta)

    if args.alpha >= 1.0:
        from .vectors import ScoreVector
        q = ScoreVector.indicator(args.root)
    else:
        if args.walks:
            verts = read_walk_file(args.walks, root=args.root)
            batch = WalkBatch(verts, lazy=args.laziness == "half")
        elif args.target is not None:
            args_length = max(args.length, pparams.T)
            engine_args = argparse.Namespace(**vars(args))
            engine_args.length = args_length
            engine_args.laziness = "half"
            params = make_stitch_params(engine_args, g)
            cluster = make_cluster(args)
            run = run_budgeted(g, args.root, params, cluster=cluster, seed=args.seed)
            batch = WalkBatch(run.walks, lazy=True)
        else:
            raise UsageError("need --walks FILE or engine params (--target ...)")
        q = approx_ppr(g, args.root, pparams, batch)

    wall = time.perf_counter() - t0
    for path in (args.out, args.csv):
        if path:
            with open(path, "w") as f:
                for line in q.csv_lines():
                    f.write(line + "\n")
    payload: Dict[str, object] = {
        "root": args.root, "alpha": args.alpha, "T": pparams.T, "M": pparams.M,
        "mass": q.mass(), "support_size": len(q),
    }
    if args.verify:
        if g.n > oracle.ORACLE_MAX_N:
            raise UsageError(f"--verify needs n <= {oracle.ORACLE_MAX_N}")
        exact = oracle.exact_ppr(g, args.root, args.alpha)
        err = float(np.abs(q.to_dense(g.n) - exact).max())
        payload["max_abs_error_vs_exact"] = err
    write_report(args.report, payload, args, wall)
    return EXIT_OK


def cmd_cluster(args) -> int:
    g = load_graph(args.graph)
    cluster = make_cluster(args)
    t0 = time.perf_counter()
    res = local_cluster(g, args.seed_vertex, args.alpha, args.target_volume,
                        T=args.T, M=args.M, cluster=cluster, seed=args.seed)
    wall = time.perf_counter() - t0
    if args.out:
        with open(args.out, "w") as f:
            for v in res.cut:
                f.write(f"{v}\n")
    if args.csv:
        _write_csv(args.csv, "prefix,vertex,phi",
                   ((j, v, "" if phi is None else phi)
                    for j, (v, phi) in enumerate(
                        zip(res.sweep.ordering, res.sweep.phis), start=1)))
    write_report(args.report, res.to_dict(), args, wall)
    return EXIT_OK


def cmd_compare_baseline(args) -> int:
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    params = make_stitch_params(args, g)
    local = run_budgeted(g, args.root, params, cluster=make_cluster(args),
                         seed=args.seed)
    b0_uniform = max(1, -(-args.target // int(g.degrees[args.root])))  # ceil
    baseline = uniform_stitching(g, b0_uniform, params.length,
                                 cluster=make_cluster(args), seed=args.seed,
                                 tau=args.baseline_tau, laziness=args.laziness)
    wall = time.perf_counter() - t0
    ratio = baseline.total_budget / local.metrics.total_budget
    if args.csv:
        _write_csv(args.csv, "algorithm,total_budget,supersteps,rooted_ok",
                   [("budgeted", local.metrics.total_budget,
                     local.metrics.supersteps, local.metrics.rooted_ok),
                    ("uniform", baseline.total_budget,
                     baseline.metrics.supersteps,
                     int(baseline.ok_per_vertex[args.root]))])
    payload = {
        "walk_target": args.target,
        "local": {"total_budget": local.metrics.total_budget,
                  "supersteps": local.metrics.supersteps,
                  "rooted_ok": local.metrics.rooted_ok},
        "baseline": {"total_budget": baseline.total_budget,
                     "supersteps": baseline.metrics.supersteps,
                     "b0_per_degree": b0_uniform,
                     "rooted_ok": int(baseline.ok_per_vertex[args.root])},
        "budget_ratio": ratio,
    }
    write_report(args.report, payload, args, wall)
    return EXIT_OK


# -- oracle-check -------------------------------------------------------------

def _check_c8_walks() -> bool:
    g = fixtures.cycle_graph(8)
    params = desk_params(length=4, target=10_000, growth=10.0, threshold=10.0,
                         base_budget=20.0, tau=1.5)
    run = run_budgeted(g, 0, params, seed=7)
    if run.walks.shape[0] < 10_000 or not validate_walks(g, run.walks, False):
        return False
    walks = run.walks[:10_000]
    for t in range(1, 5):
        emp = np.bincount(walks[:, t], minlength=g.n) / walks.shape[0]
        if oracle.tvd(emp, oracle.exact_step_dist(g, 0, t)) > 0.05:
            return False
    return True


def _check_ppr_k2() -> bool:
    g = fixtures.path_graph(2)
    p = oracle.exact_ppr(g, 0, 0.5)
    if abs(p[0] - 0.75) > 1e-9 or abs(p[1] - 0.25) > 1e-9:
        return False
    return oracle.ppr_residual(g, p, 0, 0.5) < 1e-12


def _check_k3_paths() -> bool:
    g = fixtures.complete_graph(3)
    paths = oracle.enumerate_walks(g, 0, 2)
    if len(paths) != 4 or any(pr != Fraction(1, 4) for pr in paths.values()):
        return False
    marg = np.zeros(3)
    for path, pr in paths.items():
        marg[path[2]] += float(pr)
    return oracle.tvd(marg, oracle.exact_step_dist(g, 0, 2)) < 1e-12


def _check_cliques_cut() -> bool:
    g = fixtures.two_cliques(4)
    members, phi = oracle.brute_conductance_min(g)
    if phi != Fraction(1, 13):
        return False
    from .ppr import sweep
    from .vectors import ScoreVector
    q = ScoreVector.from_dense(oracle.exact_ppr(g, 1, 0.1))
    return sweep(g, q).phi_exact == Fraction(1, 13)


ORACLE_CHECKS = {
    "c8-walks": _check_c8_walks,
    "ppr-k2": _check_ppr_k2,
    "k3-paths": _check_k3_paths,
    "cliques-cut": _check_cliques_cut,
}


def cmd_oracle_check(args) -> int:
    names = list(ORACLE_CHECKS) if args.fixture == "all" else [args.fixture]
    for name in names:
        if name not in ORACLE_CHECKS:
            raise UsageError(f"unknown fixture {name!r}; "
                             f"choose from {', '.join(ORACLE_CHECKS)} or all")
    failures = 0
    for name in names:
        ok = ORACLE_CHECKS[name]()
        print(f"{name:<14} {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else EXIT_ALGO


# -- main ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="walkstitch", description=__doc__)
    ap.add_argument("--config", help="flat key=value config file; CLI flags override")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an edge list into a binary cache")
    p.add_argument("edge_list")
    p.add_argument("cache")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("walks", help="generate rooted walks")
    add_graph_arg(p)
    p.add_argument("--root", type=int)
    p.add_argument("--budgets", help="multi-source budget file: 'vertex budget' lines")
    add_engine_args(p)
    add_cluster_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="walk output file")
    p.add_argument("--csv", help="per-cycle stats CSV (plot-ready)")
    p.add_argument("--dump-budgets", help="final-cycle budget CSV")
    p.add_argument("--report", help="metrics JSON path (default stdout)")
    p.add_argument("--timings", action="store_true",
                   help="embed wall clock in the report (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_walks)

    p = sub.add_parser("ppr", help="approximate personalized PageRank")
    add_graph_arg(p)
    p.add_argument("--root", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--T", type=int, default=64)
    p.add_argument("--M", type=int, default=50_000)
    p.add_argument("--ppr-mode", choices=("desk", "theory"), default="desk")
    p.add_argument("--walks", help="reuse a walk file instead of running the engine")
    add_engine_args(p)
    add_cluster_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="score CSV path")
    p.add_argument("--csv", help="alias of --out (plot-ready scores)")
    p.add_argument("--verify", action="store_true",
                   help="report max abs error vs the exact solver (small graphs)")
    p.add_argument("--report")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_ppr, target=None)

    p = sub.add_parser("cluster", help="seeded sweep-cut clustering")
    add_graph_arg(p)
    p.add_argument("--seed-vertex", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--target-volume", type=int, required=True)
    p.add_argument("--T", type=int, default=64)
    p.add_argument("--M", type=int, default=50_000)
    add_cluster_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="cut set file, one vertex per line")
    p.add_argument("--csv", help="sweep prefix conductances CSV (plot-ready)")
    p.add_argument("--report")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compare-baseline",
                       help="budget cost of rooted walks vs uniform stitching")
    add_graph_arg(p)
    p.add_argument("--root", type=int, required=True)
    add_engine_args(p)
    add_cluster_args(p)
    p.add_argument("--baseline-tau", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv", help="per-algorithm cost table CSV (plot-ready)")
    p.add_argument("--report")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_compare_baseline)

    p = sub.add_parser("oracle-check", help="run oracle-backed invariant suites")
    p.add_argument("fixture", help=f"one of {', '.join(ORACLE_CHECKS)} or all")
    p.set_defaults(func=cmd_oracle_check)

    return ap


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    # first pass only to find --config; then inject file values as defaults
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    try:
        if known.config:
            overrides = read_config_file(known.config)
            ap.set_defaults(**overrides)
            for sub_parser in ap._subparsers._group_actions[0].choices.values():
                keys = set()
                for action in sub_parser._actions:
                    keys.add(action.dest)
                    if action.dest in overrides:
                        action.required = False
                sub_parser.set_defaults(
                    **{k: v for k, v in overrides.items() if k in keys})
        args = ap.parse_args(argv)
        _coerce_config_types(args)
        return args.func(args)
    except (UsageError, EdgeListParseError, GraphError, ParameterError, PPRError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StitchFailure as exc:
        print(f"fail: {exc}", file=sys.stderr)
        return EXIT_ALGO
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except EngineError as exc:
        print(f"fail: {exc}", file=sys.stderr)
        return EXIT_ALGO


_INT_KEYS = {"root", "length", "target", "machines", "capacity", "seed", "T", "M",
             "seed_vertex", "target_volume"}
_FLOAT_KEYS = {"growth", "theta", "b0", "tau", "confidence", "scale", "alpha",
               "eta", "baseline_tau"}
_BOOL_KEYS = {"strict", "verify", "timings"}


def _coerce_config_types(args: argparse.Namespace) -> None:
    """Config-file values arrive as strings; coerce them to flag types."""
    for key, val in vars(args).items():
        if not isinstance(val, str):
            continue
        if key in _INT_KEYS:
            setattr(args, key, int(val))
        elif key in _FLOAT_KEYS:
            setattr(args, key, float(val))
        elif key in _BOOL_KEYS:
            setattr(args, key, val.lower() in ("1", "true", "yes", "on"))


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``stpp <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 infeasible instance, 3 time limit
reached without any usable result.  Errors are also written to stderr as one
JSON object ``{"error": ..., "message": ..., "details": [...]}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from typing import Optional, Sequence

from . import __version__
from .bench import METHODS, gap_table, run_benchmark, run_method
from .bounds import KINDS, compute_bound, mixed_giant_bound
from .config import ConfigError, SolverConfig, config_dict, load_config
from .costing import SolutionValidationError, evaluate, relative_gap, validate
from .generator import PRESETS, generate, preset
from .io import (InstanceValidationError, dumps, load_instance, load_plan, save_instance,
                 write_manifest_csv, write_metrics, write_plan, write_report, write_rows_csv,
                 write_trace)
from .model import InfeasibleBundleError, ModelError
from .perturb import BudgetExceededError

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3


class TimeoutWithoutResult(RuntimeError):
    pass


def _fail(code: int, kind: str, message: str, details: Optional[list] = None) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "details": details or []},
                                sort_keys=True) + "\n")
    return code


def _config(args) -> SolverConfig:
    cfg = load_config(getattr(args, "config", None))
    limit = getattr(args, "time_limit", None)
    if limit is not None:
        ls = replace(cfg.ils.local_search, time_limit=min(cfg.ils.local_search.time_limit, limit))
        cfg = replace(cfg, ils=replace(cfg.ils, time_limit=limit, local_search=ls),
                      bound_time_limit=limit)
    return cfg


# -- commands -------------------------------------------------------------------

def cmd_generate(args) -> int:
    overrides = {}
    for kv in args.param or []:
        k, _, v = kv.partition("=")
        try:
            overrides[k] = json.loads(v)
        except json.JSONDecodeError:
            overrides[k] = v
        if isinstance(overrides[k], list):
            overrides[k] = tuple(overrides[k])
    params = preset(args.preset, **overrides)
    inst = generate(params, args.seed)
    save_instance(inst, args.out)
    print(dumps({"instance": inst.name, "bundles": len(inst.bundles),
                 "commodities": len(inst.commodities), "out": str(args.out)}), end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    print(dumps({"valid": True, "instance": inst.name, "locations": len(inst.network.locations),
                 "arcs": len(inst.network.arcs), "commodities": len(inst.commodities),
                 "orders": len(inst.orders), "bundles": len(inst.bundles)}), end="")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.instance)
    mixed = mixed_giant_bound(inst)
    res = run_method(inst, args.method, args.seed, cfg, mixed)
    problems = validate(res.solution)
    if problems:
        raise SolutionValidationError(problems)
    cost = evaluate(res.solution, check=False)
    if args.out_plan:
        write_plan(res.solution, args.out_plan)
    if args.out_manifest_csv:
        write_manifest_csv(res.solution, args.out_manifest_csv)
    if args.trace:
        write_trace(res.trace, args.trace)
    metrics = {
        "instance": inst.name, "method": args.method, "seed": args.seed,
        "cost": cost.as_dict(), "bins": res.solution.bin_count(),
        "bound": mixed.as_dict(), "gap": relative_gap(cost.total, mixed.value),
        "trace_summary": dict(sorted(Counter(r.move for r in res.trace).items())),
        "accepted_moves": len(res.trace), "config": config_dict(cfg),
    }
    if args.timing:
        metrics["elapsed"] = res.elapsed
    if args.out_metrics:
        write_metrics(metrics, args.out_metrics)
    print(dumps({"method": args.method, "cost": cost.total, "gap": metrics["gap"]}), end="")
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.instance)
    cert = compute_bound(inst, args.kind, cfg.bound_time_limit, cfg.perturb.variable_budget)
    if args.kind == "full" and cert.value <= 0 and not cert.optimal and "timeout" in cert.notes:
        raise TimeoutWithoutResult("no dual bound within the time limit")
    doc = {"instance": inst.name, "certificate": cert.as_dict(args.timing)}
    if args.out:
        write_metrics(doc, args.out)
    print(dumps(doc), end="")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    instances = [load_instance(p) for p in args.instances]
    methods = [m for chunk in args.methods for m in chunk.split(",") if m]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    report = run_benchmark(instances, methods, args.seeds, cfg, full=args.full, timing=args.timing)
    if args.out_report:
        write_report(report, args.out_report)
    if args.out_csv:
        fields = ["instance", "method", "seed", "cost", "bound", "gap", "bins"]
        write_rows_csv(args.out_csv, fields + (["elapsed"] if args.timing else []), report["rows"])
    print(gap_table(report))
    return EXIT_OK


def cmd_score(args) -> int:
    inst = load_instance(args.instance)
    try:
        sol, stored = load_plan(inst, args.plan)
    except (KeyError, IndexError, TypeError) as e:
        raise SolutionValidationError([f"plan does not match the instance: {e!r}"]) from e
    cost = evaluate(sol)
    cert = compute_bound(inst, args.bound_kind)
    doc = {"instance": inst.name, "cost": cost.as_dict(), "stored_cost": stored.as_dict(),
           "matches_stored": abs(cost.total - stored.total) <= 1e-6 * max(1.0, abs(stored.total)),
           "bound": cert.as_dict(), "gap": relative_gap(cost.total, cert.value)}
    print(dumps(doc), end="")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stpp", description="Shipper transportation planning solver.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--preset", choices=sorted(PRESETS), default="XS")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="override a generator parameter (JSON value), repeatable")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("instance")
    v.set_defaults(func=cmd_validate)

    def common(sp, time_default=None):
        sp.add_argument("--config", help="JSON file overriding solver knobs "
                        "(local_search.time_limit=2700, perturb.milp_time_limit=120, "
                        "perturb.variable_budget=2000000, perturb.path_change_threshold=0.15, "
                        "perturb.path_family_coverage=0.30, perturb.cost_tolerance=0.015, "
                        "perturb.loop_abort=0.02)")
        sp.add_argument("--time-limit", type=float, default=time_default,
                        help="overall time limit in seconds (overrides the config)")
        sp.add_argument("--timing", action="store_true",
                        help="include wall-clock times in output files (breaks byte stability)")

    s = sub.add_parser("solve", help="build a plan with one method")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="ils")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-plan")
    s.add_argument("--out-metrics")
    s.add_argument("--out-manifest-csv")
    s.add_argument("--trace", help="CSV of accepted moves")
    common(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bound", help="compute a lower bound")
    b.add_argument("instance")
    b.add_argument("--kind", choices=KINDS, default="mixed")
    b.add_argument("--out")
    common(b)
    b.set_defaults(func=cmd_bound)

    bm = sub.add_parser("benchmark", help="compare methods over instances and seeds")
    bm.add_argument("instances", nargs="+")
    bm.add_argument("--methods", nargs="+", default=[",".join(METHODS)],
                    help="comma or space separated subset of " + ",".join(METHODS))
    bm.add_argument("--seeds", nargs="+", type=int, default=[0])
    bm.add_argument("--out-report")
    bm.add_argument("--out-csv")
    bm.add_argument("--full", choices=("auto", "always", "never"), default="auto",
                    help="whether to compute the full giant-container bound")
    common(bm)
    bm.set_defaults(func=cmd_benchmark)

    sc = sub.add_parser("score", help="evaluate a plan file and its gap to a bound")
    sc.add_argument("instance")
    sc.add_argument("plan")
    sc.add_argument("--bound-kind", choices=("linear", "mixed"), default="mixed")
    sc.set_defaults(func=cmd_score)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InstanceValidationError as e:
        return _fail(EXIT_INVALID, "invalid_instance", "instance failed validation", e.violations)
    except SolutionValidationError as e:
        return _fail(EXIT_INVALID, "invalid_plan", "plan failed validation", e.violations)
    except InfeasibleBundleError as e:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(e), [e.bundle_id])
    except TimeoutWithoutResult as e:
        return _fail(EXIT_TIMEOUT, "timeout", str(e))
    except (ConfigError, ModelError, BudgetExceededError, ValueError) as e:
        return _fail(EXIT_INVALID, type(e).__name__, str(e))
    except (OSError, json.JSONDecodeError) as e:
        return _fail(EXIT_INVALID, type(e).__name__, str(e))


if __name__ == "__main__":
    sys.exit(main())

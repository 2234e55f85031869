"""Baseline heuristics and the method comparison harness."""
from __future__ import annotations

import logging
import math
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import BoundCertificate, full_giant_bound, linear_bound, mixed_giant_bound, rounding_heuristic
from .config import SolverConfig
from .construct import constructive, insertion_order, solution_from_paths
from .costing import evaluate, relative_gap, validate
from .insertion import best_elementary_path, distance_weight
from .local_search import TraceRecord
from .model import SHORTCUT, InfeasibleBundleError, Instance, TTArc, wrap_week
from .perturb import BudgetExceededError, estimate_flow_vars, ils
from .solution import Solution

log = logging.getLogger(__name__)

METHODS = ("constructive", "ils", "shortest", "average", "lbr")


def shortest_heuristic(instance: Instance) -> Solution:
    """Shortest-distance path per bundle, then pack every arc."""
    w = distance_weight(instance)
    paths = {}
    for b in range(len(instance.bundles)):
        _, path, _ = best_elementary_path(instance.bundle_graph(b), w, instance)
        if not path:
            raise InfeasibleBundleError(instance.bundles[b].id)
        paths[b] = path
    return solution_from_paths(instance, paths)


def average_heuristic(instance: Instance) -> Solution:
    """Route each bundle as if all its orders were one order due in week 1.

    Bundles are inserted one by one (same order as the constructive
    heuristic) against integer bin counts on aggregated arc volumes; the chosen
    paths are then applied to the real orders and packed.
    """
    net = instance.network
    load: dict[tuple[int, int], float] = defaultdict(float)
    paths = {}
    for b in insertion_order(instance):
        bundle = instance.bundles[b]
        orders = [instance.orders[o] for o in bundle.orders]
        volume = sum(o.volume for o in orders)
        capital = sum(o.capital for o in orders)

        def week_of(alpha: TTArc) -> int:
            return wrap_week(1 - (instance.steps - alpha.tail[1]), instance.horizon)

        def w(alpha: TTArc) -> float:
            if alpha.arc == SHORTCUT:
                return 0.0
            arc = net.arcs[alpha.arc]
            c = volume * net.volume_rate[alpha.arc] + arc.distance * capital
            if arc.consolidated:
                before = load[(alpha.arc, week_of(alpha))]
                c += (math.ceil((before + volume) / arc.capacity - 1e-9)
                      - math.ceil(before / arc.capacity - 1e-9)) * arc.bin_cost
            return c

        _, path, _ = best_elementary_path(instance.bundle_graph(b), w, instance)
        if not path:
            raise InfeasibleBundleError(bundle.id)
        paths[b] = path
        for alpha in path:
            if alpha.arc != SHORTCUT and net.arcs[alpha.arc].consolidated:
                load[(alpha.arc, week_of(alpha))] += volume
    return solution_from_paths(instance, paths)


@dataclass
class RunResult:
    method: str
    seed: int
    solution: Solution
    trace: list[TraceRecord]
    elapsed: float


def run_method(instance: Instance, method: str, seed: int = 0,
               config: Optional[SolverConfig] = None,
               mixed: Optional[BoundCertificate] = None) -> RunResult:
    config = config or SolverConfig()
    t0 = time.perf_counter()
    trace: list[TraceRecord] = []
    if method == "constructive":
        sol = constructive(instance)
    elif method == "ils":
        sol, trace = ils(instance, config.ils, seed=seed)
    elif method == "shortest":
        sol = shortest_heuristic(instance)
    elif method == "average":
        sol = average_heuristic(instance)
    elif method == "lbr":
        sol = rounding_heuristic(instance, mixed)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return RunResult(method, seed, sol, trace, time.perf_counter() - t0)


def best_bound(instance: Instance, config: Optional[SolverConfig] = None,
               full: str = "auto", full_budget: int = 20_000) -> list[BoundCertificate]:
    """Linear and mixed bounds, plus the full bound when the model is small enough.

    ``full`` is "always", "never" or "auto" (only under ``full_budget`` variables).
    """
    config = config or SolverConfig()
    certs = [linear_bound(instance), mixed_giant_bound(instance)]
    n = estimate_flow_vars(instance, range(len(instance.bundles)))
    if full == "always" or (full == "auto" and n <= full_budget):
        try:
            certs.append(full_giant_bound(instance, config.bound_time_limit,
                                          config.perturb.variable_budget,
                                          rel_gap=config.bound_rel_gap))
        except BudgetExceededError as e:
            log.info("full bound skipped: %s", e)
    return certs


def run_benchmark(instances: Sequence[Instance], methods: Sequence[str] = METHODS,
                  seeds: Sequence[int] = (0,), config: Optional[SolverConfig] = None,
                  full: str = "auto", timing: bool = False,
                  on_run: Optional[Callable[[Instance, RunResult], None]] = None) -> dict:
    """Every method on every instance and seed; gaps are against the best bound.

    Deterministic methods are run once per instance and reported under every
    seed.  Wall-clock times only enter the report with ``timing``.
    """
    config = config or SolverConfig()
    rows = []
    bounds = {}
    for inst in instances:
        certs = best_bound(inst, config, full)
        mixed = next(c for c in certs if c.kind == "mixed")
        bound = max(c.value for c in certs)
        bounds[inst.name] = {"best": bound, "certificates": [c.as_dict(timing) for c in certs]}
        cache: dict[str, RunResult] = {}
        for method in methods:
            for seed in seeds:
                if method != "ils" and method in cache:
                    res = cache[method]
                else:
                    res = run_method(inst, method, seed, config, mixed)
                    cache[method] = res
                    if on_run is not None:
                        on_run(inst, res)
                problems = validate(res.solution)
                if problems:
                    raise RuntimeError(f"{method} produced an invalid plan: {problems[:3]}")
                cost = evaluate(res.solution, check=False)
                row = {"instance": inst.name, "method": method, "seed": seed,
                       "cost": cost.total, "bin_cost": cost.bin_cost,
                       "commodity_cost": cost.commodity_cost,
                       "overload_cost": cost.overload_cost, "bound": bound,
                       "gap": relative_gap(cost.total, bound),
                       "bins": res.solution.bin_count(),
                       "accepted_moves": sum(1 for r in res.trace if r.phase.startswith("ls"))}
                if timing:
                    row["elapsed"] = res.elapsed
                rows.append(row)
    return {"bounds": bounds, "rows": rows, "summary": summarize(rows)}


def summarize(rows: list[dict]) -> list[dict]:
    """Median cost and gap per (instance, method) over seeds."""
    groups: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in rows:
        groups[(r["instance"], r["method"])].append(r)
    out = []
    for (inst, method), rs in sorted(groups.items()):
        out.append({"instance": inst, "method": method, "runs": len(rs),
                    "median_cost": statistics.median(r["cost"] for r in rs),
                    "median_gap": statistics.median(r["gap"] for r in rs)})
    return out


def gap_table(report: dict) -> str:
    lines = [f"{'instance':<16} {'method':<13} {'runs':>4} {'median cost':>14} {'gap %':>8}"]
    for s in report["summary"]:
        lines.append(f"{s['instance']:<16} {s['method']:<13} {s['runs']:>4} "
                     f"{s['median_cost']:>14.2f} {100 * s['median_gap']:>8.2f}")
    return "\n".join(lines)


def median_by_method(report: dict) -> dict[str, float]:
    """Median over all rows of a method (across instances and seeds)."""
    by: dict[str, list[float]] = defaultdict(list)
    for r in report["rows"]:
        by[r["method"]].append(r["cost"])
    return {m: float(np.median(v)) for m, v in by.items()}

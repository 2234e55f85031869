"""Acceptance criteria 1-10, each checked at its stated tolerance.

Every test records one PASS/FAIL line that is printed (also with ``-s``) and
repeated in the terminal summary.
"""
import itertools
import json
import math
import statistics
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, EXTRA_REPORT
from oracles import brute_force_optimum, brute_force_path_model
from stpp.bench import METHODS, gap_table, run_benchmark, run_method
from stpp.bounds import full_giant_bound, linear_bound, mixed_giant_bound, whole_model_lp
from stpp.cli import main
from stpp.config import ILSConfig, LocalSearchConfig, PerturbConfig, SolverConfig
from stpp.construct import constructive, insertion_order
from stpp.costing import evaluate, relative_gap
from stpp.generator import generate, preset
from stpp.insertion import enumerate_paths, insert_bundle
from stpp.io import instance_to_dict, dumps, load_plan, plan_to_dict, save_instance, write_plan
from stpp.local_search import local_search, repack
from stpp.milp import solve_milp
from stpp.packing import exact_pack, ffd_pack
from stpp.perturb import build_path_milp, ils, k_shortest_paths
from stpp.solution import Solution

SLACK = 1e-6

SMALL_ILS = ILSConfig(time_limit=10, rounds=1, local_search=LocalSearchConfig(max_stall=80),
                      perturb=PerturbConfig(milp_time_limit=2, variable_budget=4000, max_rounds=2,
                                            mip_rel_gap=0.01))
M_CONFIG = SolverConfig(ils=ILSConfig(
    time_limit=180, rounds=10, local_search=LocalSearchConfig(max_stall=400),
    perturb=PerturbConfig(milp_time_limit=5, variable_budget=20_000, max_rounds=6,
                          mip_rel_gap=0.01)))


def record(k: int, ok: bool, detail: str) -> None:
    line = f"acceptance {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)


def le(a: float, b: float) -> bool:
    return a <= b + SLACK * max(1.0, abs(b))


# 1 ----------------------------------------------------------------------------------------

@pytest.mark.slow
def test_1_bound_chain():
    t0 = time.perf_counter()
    cfg = SolverConfig(ils=SMALL_ILS)
    failures = []
    for seed in range(100):
        inst = generate(preset("tiny"), seed)
        lin, mix = linear_bound(inst), mixed_giant_bound(inst)
        full = full_giant_bound(inst, time_limit=60)
        opt = brute_force_optimum(inst)
        heur = min(evaluate(run_method(inst, m, seed, cfg, mix).solution).total for m in METHODS)
        chain = [lin.value, mix.value, full.value, opt, heur]
        if not (full.optimal and all(le(a, b) for a, b in zip(chain, chain[1:]))):
            failures.append((seed, chain))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 600
    record(1, ok, f"100 instances, {len(failures)} chain violations, {elapsed:.0f}s")
    assert not failures, failures[:3]
    assert elapsed < 600


# 2 ----------------------------------------------------------------------------------------

def test_2_ffd_guarantee():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        vols = np.round(rng.uniform(0.02, 1.0, n), 3)
        items = [(i, float(v), 1) for i, v in enumerate(vols)]
        opt = exact_pack(items, 1.0)
        if ffd_pack(items, 1.0).n_bins > math.ceil(11 / 9 * opt + 6 / 9):
            bad += 1
    elapsed = time.perf_counter() - t0
    record(2, bad == 0 and elapsed < 60, f"1000 instances, {bad} violations, {elapsed:.1f}s")
    assert bad == 0 and elapsed < 60


# 3 ----------------------------------------------------------------------------------------

def test_3_insertion_optimality():
    t0 = time.perf_counter()
    cases = mismatches = 0
    seed = 0
    while cases < 120:
        inst = generate(preset("XS"), seed)
        seed += 1
        sol = Solution(inst)
        for b in insertion_order(inst)[:12]:
            best = math.inf
            for path in enumerate_paths(inst.bundle_graph(b), inst):
                sol.checkpoint()
                best = min(best, sol.assign(b, path))
                sol.rollback()
            cost = insert_bundle(sol, b).cost
            cases += 1
            if abs(cost - best) > SLACK * max(1.0, abs(best)):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    record(3, ok, f"{cases} XS insertions, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# 4 ----------------------------------------------------------------------------------------

@pytest.mark.slow
def test_4_monotonicity():
    t0 = time.perf_counter()
    problems = []
    for name in ("XS", "S", "frag"):
        for seed in range(10):
            inst = generate(preset(name), seed)
            base = constructive(inst)
            sol = base.copy()
            d = repack(sol)
            if d > 0:
                problems.append((name, seed, "repack", d))
            start = sol.total
            local_search(sol, LocalSearchConfig(max_stall=80), np.random.default_rng(seed))
            if sol.total > start + 1e-9:
                problems.append((name, seed, "local_search", sol.total - start))
            best, _ = ils(inst, SMALL_ILS, seed)
            if best.total > base.total + 1e-9:
                problems.append((name, seed, "ils", best.total - base.total))
    elapsed = time.perf_counter() - t0
    record(4, not problems, f"30 runs (XS, S, frag x 10 seeds), {len(problems)} increases, "
                            f"{elapsed:.0f}s")
    assert not problems, problems


# 5 ----------------------------------------------------------------------------------------

@pytest.mark.slow
def test_5_method_ordering_on_m():
    t0 = time.perf_counter()
    costs = {m: [] for m in METHODS}
    rows = []
    for seed in range(5):
        inst = generate(preset("M"), seed)
        rep = run_benchmark([inst], METHODS, (seed,), M_CONFIG, full="never")
        rows += rep["rows"]
        for r in rep["rows"]:
            costs[r["method"]].append(r["cost"])
    med = {m: statistics.median(v) for m, v in costs.items()}
    report = {"rows": rows, "summary": []}
    from stpp.bench import summarize
    report["summary"] = summarize(rows)
    by_method = {m: statistics.median(r["gap"] for r in rows if r["method"] == m) for m in METHODS}
    table = [gap_table(report), "", f"{'method':<13} {'median cost':>14} {'median gap %':>13}"]
    table += [f"{m:<13} {med[m]:>14.2f} {100 * by_method[m]:>13.2f}" for m in METHODS]
    EXTRA_REPORT.extend(["preset M gap table (5 seeds)"] + table + [""])
    print("\n".join(table))
    elapsed = time.perf_counter() - t0
    checks = {
        "ils<=constructive": med["ils"] <= med["constructive"],
        "constructive<=average-or-lbr": med["constructive"] <= max(med["average"], med["lbr"]),
        "shortest worst": med["shortest"] >= max(v for m, v in med.items() if m != "shortest"),
        "runtime<=30min": elapsed <= 1800,
    }
    ok = all(checks.values())
    record(5, ok, ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in checks.items())
           + f" (lbr {'above' if med['lbr'] >= med['constructive'] else 'below'} constructive), "
             f"{elapsed:.0f}s")
    assert ok, (checks, med)


# 6 ----------------------------------------------------------------------------------------

@pytest.mark.slow
def test_6_rounding_vs_ils():
    inst = generate(preset("frag"), 0)
    cfg = SolverConfig(ils=ILSConfig(
        time_limit=150, rounds=10, local_search=LocalSearchConfig(max_stall=400),
        perturb=PerturbConfig(milp_time_limit=5, variable_budget=20_000, max_rounds=6,
                              mip_rel_gap=0.01)))
    mix = mixed_giant_bound(inst)
    bound = max(linear_bound(inst).value, mix.value)
    lbr = run_method(inst, "lbr", 0, cfg, mix).solution.total
    best = run_method(inst, "ils", 0, cfg, mix).solution.total
    g_lbr, g_ils = relative_gap(lbr, bound), relative_gap(best, bound)
    ok = g_lbr >= g_ils + 0.05
    record(6, ok, f"frag seed 0: gap(lbr) {100 * g_lbr:.1f}% vs gap(ils) {100 * g_ils:.1f}%")
    assert ok


# 7 ----------------------------------------------------------------------------------------

def test_7_lp_equals_shortest_paths():
    worst = 0.0
    for seed in range(20):
        inst = generate(preset("XS"), seed)
        lp, lin = whole_model_lp(inst, overload=False), linear_bound(inst).value
        worst = max(worst, abs(lp - lin) / max(1.0, abs(lin)))
    ok = worst <= SLACK
    record(7, ok, f"20 XS instances, max relative difference {worst:.2e}")
    assert ok


# 8 ----------------------------------------------------------------------------------------

def test_8_milp_matches_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    bad = []
    for case in range(60):
        inst = generate(preset("XS"), int(rng.integers(10_000)))
        sol = constructive(inst)
        n = int(rng.integers(1, 11))
        chosen = sorted(int(b) for b in rng.choice(len(inst.bundles), size=n, replace=False))
        for b in chosen:
            sol.unassign(b)
        paths = {b: k_shortest_paths(inst, b, int(rng.integers(1, 4))) for b in chosen}
        pm = build_path_milp(sol, paths, require_current=False)
        res = solve_milp(pm.model, time_limit=60, mip_rel_gap=0.0)
        expect = brute_force_path_model(sol, paths)
        if not (res.optimal and abs(res.objective - expect) <= SLACK * max(1.0, abs(expect))):
            bad.append((case, res.status, res.objective, expect))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120
    record(8, ok, f"60 path models, {len(bad)} mismatches, {elapsed:.1f}s")
    assert ok, bad[:3]


# 9 ----------------------------------------------------------------------------------------

def _run_twice(tmp_path, argv, outputs, capsys):
    got = []
    for run in range(2):
        d = tmp_path / f"run{run}"
        d.mkdir(exist_ok=True)
        args = [a.format(d=d) for a in argv]
        assert main(args) == 0, args
        out = capsys.readouterr().out.replace(str(d), "{d}")
        got.append([out.encode()] + [(d / o).read_bytes() for o in outputs])
    return got[0] == got[1]


def test_9_cli_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"ils": {"time_limit": 600, "rounds": 1},
                               "local_search": {"max_stall": 60},
                               "perturb": {"milp_time_limit": 600, "variable_budget": 3000,
                                           "max_rounds": 2}}))
    insts = []
    for name, seed in (("tiny", 0), ("tiny", 5), ("XS", 1)):
        p = tmp_path / f"{name}{seed}.json"
        main(["generate", "--preset", name, "--seed", str(seed), "--out", str(p)])
        insts.append(str(p))
    capsys.readouterr()
    plan0 = tmp_path / "plan0.json"
    main(["solve", insts[0], "--method", "constructive", "--out-plan", str(plan0)])
    capsys.readouterr()
    checks = {
        "generate": [(["generate", "--preset", p, "--seed", str(s), "--out", "{d}/i.json"], ["i.json"])
                     for p, s in (("tiny", 1), ("XS", 2), ("S", 3))],
        "validate": [(["validate", i], []) for i in insts],
        "solve": [(["solve", i, "--method", m, "--seed", "4", "--config", str(cfg),
                    "--out-plan", "{d}/p.json", "--out-metrics", "{d}/m.json"], ["p.json", "m.json"])
                  for i, m in zip(insts, ("ils", "lbr", "ils"))],
        "bound": [(["bound", i, "--kind", k, "--out", "{d}/b.json"], ["b.json"])
                  for i, k in zip(insts, ("full", "mixed", "linear"))],
        "benchmark": [(["benchmark", i, "--methods", "constructive,ils,average", "--seeds", "0", "1",
                        "--config", str(cfg), "--full", "never",
                        "--out-report", "{d}/r.json", "--out-csv", "{d}/r.csv"], ["r.json", "r.csv"])
                      for i in insts[:2]] + [(["benchmark", insts[0], "--methods", "shortest,lbr",
                                               "--out-report", "{d}/r.json"], ["r.json"])],
        "score": [(["score", insts[0], str(plan0), "--bound-kind", k], []) for k in ("linear", "mixed")]
        + [(["score", insts[0], str(plan0)], [])],
    }
    failed = []
    for sub, runs in checks.items():
        for argv, outputs in runs:
            if not _run_twice(tmp_path, argv, outputs, capsys):
                failed.append(" ".join(argv[:3]))
    n = sum(len(v) for v in checks.values())
    record(9, not failed, f"{n} spot checks over {len(checks)} subcommands, {len(failed)} differ")
    assert not failed, failed


# 10 ---------------------------------------------------------------------------------------

def test_10_round_trip(tmp_path):
    problems = []
    for name, seed in (("tiny", 0), ("XS", 0), ("XS", 1), ("S", 0), ("frag", 0)):
        inst = generate(preset(name), seed)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(inst, a)
        from stpp.io import load_instance
        save_instance(load_instance(a), b)
        if a.read_bytes() != b.read_bytes():
            problems.append((name, seed, "instance"))
        sol = constructive(inst)
        local_search(sol, LocalSearchConfig(max_stall=30), np.random.default_rng(seed))
        pa, pb = tmp_path / "pa.json", tmp_path / "pb.json"
        write_plan(sol, pa)
        again, stored = load_plan(load_instance(a), pa)
        write_plan(again, pb)
        if pa.read_bytes() != pb.read_bytes():
            problems.append((name, seed, "plan"))
        cost = evaluate(again)
        for f in ("bin_cost", "commodity_cost", "overload_cost", "total"):
            if abs(getattr(cost, f) - getattr(stored, f)) > 1e-6:
                problems.append((name, seed, f))
    record(10, not problems, f"5 instances and plans, {len(problems)} mismatches")
    assert not problems, problems

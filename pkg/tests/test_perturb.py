import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_path_model
from stpp.config import ILSConfig, LocalSearchConfig, PerturbConfig
from stpp.construct import constructive
from stpp.costing import evaluate, validate
from stpp.generator import generate, preset
from stpp.insertion import enumerate_paths
from stpp.milp import solve_milp
from stpp.perturb import (PathEnumerationError, apply_paths, build_flow_milp, build_path_milp,
                          candidate_paths, ils, k_shortest_paths, perturb, select_subproblem,
                          slope_scale)
from stpp.solution import Solution

DESK = PerturbConfig(milp_time_limit=5, variable_budget=4000, max_rounds=4, mip_rel_gap=0.01)


def test_slope_scale_examples():
    assert slope_scale(30.0, 4, 2.4, 1.0) == pytest.approx(40.0)
    assert slope_scale(30.0, 3, 2.4, 1.0) == pytest.approx(30.0)
    assert slope_scale(30.0, 0, 0.0, 1.0) == 30.0


def random_path_model(seed, max_bundles=10, k=3):
    rng = np.random.default_rng(seed)
    inst = generate(preset("XS"), int(rng.integers(1000)))
    sol = constructive(inst)
    n = int(rng.integers(1, max_bundles + 1))
    chosen = sorted(int(b) for b in rng.choice(len(inst.bundles), size=n, replace=False))
    for b in chosen:
        sol.unassign(b)
    paths = {b: k_shortest_paths(inst, b, int(rng.integers(1, k + 1))) for b in chosen}
    return sol, paths


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_path_milp_matches_enumeration(seed):
    sol, paths = random_path_model(seed, max_bundles=6)
    pm = build_path_milp(sol, paths, require_current=False)
    res = solve_milp(pm.model, mip_rel_gap=0.0)
    assert res.optimal
    expect = brute_force_path_model(sol, paths)
    assert res.objective == pytest.approx(expect, rel=1e-6, abs=1e-6)
    decoded = pm.decode(res.x)
    assert sorted(decoded) == sorted(paths)
    assert all(decoded[b] in paths[b] for b in paths)


def test_flow_milp_matches_path_enumeration_on_tiny():
    for seed in range(3):
        inst = generate(preset("tiny"), seed)
        empty = Solution(inst)
        allp = {b: enumerate_paths(inst.bundle_graph(b), inst) for b in range(len(inst.bundles))}
        flow = solve_milp(build_flow_milp(empty, list(allp), scaled=False).model, mip_rel_gap=0.0)
        assert flow.objective == pytest.approx(brute_force_path_model(empty, allp), rel=1e-6)


def test_path_milp_requires_current_path():
    inst = generate(preset("XS"), 0)
    sol = constructive(inst)
    others = [p for p in k_shortest_paths(inst, 0, 5) if p != sol.paths[0]]
    with pytest.raises(PathEnumerationError):
        build_path_milp(sol, {0: others[:1]})
    with pytest.raises(PathEnumerationError):
        build_path_milp(sol, {0: []})


def test_candidates_start_with_current_and_are_distinct():
    inst = generate(preset("XS"), 1)
    sol = constructive(inst)
    for b in range(5):
        c = candidate_paths(sol, b, 5)
        assert c[0] == sol.paths[b]
        assert len({tuple(p) for p in c}) == len(c)


@pytest.mark.parametrize("family", ["single_plant", "single_supplier", "random", "attract",
                                    "reduce", "directs"])
def test_select_subproblem_deterministic(family):
    inst = generate(preset("XS"), 2)
    sol = constructive(inst)
    a = select_subproblem(family, sol, np.random.default_rng(3), DESK)
    b = select_subproblem(family, sol, np.random.default_rng(3), DESK)
    assert a == b
    assert set(a.bundles) <= set(sol.paths)
    if family in ("single_plant", "single_supplier", "random") and a.bundles:
        from stpp.perturb import estimate_flow_vars
        assert estimate_flow_vars(inst, a.bundles) <= DESK.variable_budget or len(a.bundles) == 1


def test_select_unknown_family():
    sol = constructive(generate(preset("tiny"), 0))
    with pytest.raises(ValueError):
        select_subproblem("nope", sol, np.random.default_rng(0))


def test_apply_current_paths_changes_nothing_but_packing():
    inst = generate(preset("XS"), 3)
    sol = constructive(inst)
    before = sol.total
    delta = apply_paths(sol, {b: sol.paths[b] for b in range(6)})
    assert delta <= 1e-9
    assert sol.total == pytest.approx(before + delta)
    assert validate(sol) == []


def test_perturb_respects_loop_abort():
    inst = generate(preset("XS"), 4)
    sol = constructive(inst)
    start = sol.total
    rounds = perturb(sol, np.random.default_rng(0), DESK)
    assert rounds
    assert sol.total <= start * (1 + DESK.loop_abort) + 1e-6
    assert validate(sol) == []
    assert evaluate(sol).total == pytest.approx(sol.total, rel=1e-9)


def test_ils_never_worse_than_constructive():
    inst = generate(preset("XS"), 5)
    cfg = ILSConfig(time_limit=60, rounds=2, local_search=LocalSearchConfig(max_stall=100),
                    perturb=DESK)
    best, trace = ils(inst, cfg, seed=1)
    assert best.total <= constructive(inst).total + 1e-9
    assert validate(best) == []
    assert trace[0].move == "constructive"

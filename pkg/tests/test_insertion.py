import pytest
from hypothesis import given, settings, strategies as st

from builders import build, commodity, platform, supplier, two_route, unit
from stpp.construct import constructive, insertion_order
from stpp.costing import evaluate
from stpp.generator import generate, preset
from stpp.insertion import (BundleNotPresentError, best_elementary_path, enumerate_paths,
                            insert_bundle, insertion_weight, is_elementary, remove_bundle)
from stpp.model import SHORTCUT, InfeasibleBundleError
from stpp.solution import Solution


def enumeration_minimum(sol, b):
    """Cheapest insertion delta over every elementary path, by trial assignment."""
    best = float("inf")
    for path in enumerate_paths(sol.instance.bundle_graph(b), sol.instance):
        sol.checkpoint()
        delta = sol.assign(b, path)
        sol.rollback()
        best = min(best, delta)
    return best


def test_two_route_first_bundle_goes_direct():
    sol = Solution(two_route(direct_cost=5.0, leg_cost=3.0))
    res = insert_bundle(sol, 0)
    assert res.cost == pytest.approx(5.0)
    used = [sol.instance.network.arcs[a.arc].id for a in res.path if a.arc != SHORTCUT]
    assert used == ["S1-U"]


def test_two_route_second_bundle_shares_bins():
    # direct 10 vs 3+3 for the first; the second rides the half-empty P-U bin for 3
    sol = Solution(two_route(direct_cost=10.0, leg_cost=3.0))
    assert insert_bundle(sol, 0).cost == pytest.approx(6.0)
    assert insert_bundle(sol, 1).cost == pytest.approx(3.0)
    assert evaluate(sol).total == pytest.approx(9.0)


def test_insert_twice_rejected_and_remove_missing_rejected():
    sol = Solution(two_route())
    insert_bundle(sol, 0)
    with pytest.raises(ValueError):
        insert_bundle(sol, 0)
    with pytest.raises(BundleNotPresentError):
        remove_bundle(sol, 1)


def test_infeasible_bundle():
    locs = [supplier("S"), platform("P"), unit("U")]
    inst = build(locs, [("S", "P", {"tau": 1}), ("P", "U", {"tau": 1})],
                 [commodity("m", "S", "U", 1, 0.5, tau=1)], horizon=2)
    with pytest.raises(InfeasibleBundleError):
        insert_bundle(Solution(inst), 0)


def test_label_fallback_keeps_paths_elementary():
    inst = generate(preset("XS"), 2)
    sol = constructive(inst)
    for path in sol.paths.values():
        assert is_elementary(inst.network, path)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_insert_matches_path_enumeration(seed):
    inst = generate(preset("tiny"), seed)
    sol = Solution(inst)
    for b in insertion_order(inst):
        expect = enumeration_minimum(sol, b)
        res = insert_bundle(sol, b)
        assert res.cost == pytest.approx(expect, rel=1e-9, abs=1e-9)
        assert res.delta == pytest.approx(res.cost, rel=1e-9, abs=1e-9)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_remove_then_insert_does_not_increase(seed):
    inst = generate(preset("tiny"), seed)
    sol = constructive(inst)
    for b in range(len(inst.bundles)):
        before = sol.total
        remove_bundle(sol, b)
        insert_bundle(sol, b)
        assert sol.total <= before + 1e-6


def test_remove_restores_state_exactly():
    inst = generate(preset("XS"), 3)
    sol = constructive(inst)
    b = max(sol.paths)
    snap = sol.copy()
    remove_bundle(sol, b)
    sol.assign(b, snap.paths[b])
    assert sol.total == pytest.approx(snap.total)
    assert sol.manifests == snap.manifests


def test_refill_never_adds_bins():
    inst = generate(preset("XS"), 1)
    a, b = constructive(inst), constructive(inst)
    for k in range(0, len(inst.bundles), 2):
        remove_bundle(a, k)
        remove_bundle(b, k, refill=True)
    assert b.total <= a.total + 1e-9


def test_best_path_cost_matches_weight_sum():
    inst = generate(preset("XS"), 0)
    sol = constructive(inst)
    b = 0
    remove_bundle(sol, b)
    w = insertion_weight(sol, b)
    cost, path, _ = best_elementary_path(inst.bundle_graph(b), w, inst)
    assert cost == pytest.approx(sum(w(a) for a in path))

import numpy as np
import pytest

from builders import two_route
from stpp.config import LocalSearchConfig
from stpp.construct import constructive
from stpp.costing import evaluate, validate
from stpp.generator import generate, preset
from stpp.local_search import consolidate_and_refine, local_search, node_pairs, reinsert, repack
from stpp.packing import Bin, Manifest


def _split_shared_bin():
    """Both bundles on the platform route, shared P-U load split into two bins."""
    sol = constructive(two_route(direct_cost=10.0, leg_cost=3.0))
    net = sol.instance.network
    key = next(k for k in sol.manifests if net.arcs[k[0]].id == "P-U")
    assert sol.manifests[key].n_bins == 1
    sol.set_manifest(key, Manifest(1.0, [Bin(0.5, {0: 1}), Bin(0.5, {1: 1})]))
    return sol, key


def test_repack_merges_half_bins():
    sol, key = _split_shared_bin()
    assert repack(sol) == pytest.approx(-3.0)
    assert sol.manifests[key].n_bins == 1
    assert validate(sol) == []


def test_repack_on_tight_manifests_is_zero():
    sol = constructive(two_route())
    assert repack(sol) == 0.0


def test_rejected_move_restores_state():
    inst = generate(preset("XS"), 0)
    sol = constructive(inst)
    local_search(sol, LocalSearchConfig(max_stall=200), np.random.default_rng(0))
    snap = sol.copy()
    for b in range(len(inst.bundles)):
        if reinsert(sol, b) == 0.0:
            assert sol.paths == snap.paths
            assert sol.manifests == snap.manifests
            assert sol.total == snap.total
        else:
            snap = sol.copy()


def test_rollback_is_exact_after_nested_changes():
    inst = generate(preset("XS"), 1)
    sol = constructive(inst)
    snap = sol.copy()
    sol.checkpoint()
    sol.unassign(0)
    sol.checkpoint()
    sol.unassign(1)
    sol.commit()
    repack(sol)
    sol.rollback()
    assert sol.paths == snap.paths
    assert sol.manifests == snap.manifests
    assert sol.inbound == snap.inbound
    assert sol.total == snap.total


def test_consolidate_never_increases():
    inst = generate(preset("XS"), 2)
    sol = constructive(inst)
    for pair, visits in list(node_pairs(sol).items())[:15]:
        before = sol.total
        delta = consolidate_and_refine(sol, pair, node_pairs(sol).get(pair, visits))
        assert delta <= 0.0
        assert sol.total == pytest.approx(before + delta)
    assert validate(sol) == []


@pytest.mark.parametrize("name", ["XS", "frag"])
@pytest.mark.parametrize("seed", [0, 1])
def test_local_search_monotone_and_valid(name, seed):
    inst = generate(preset(name), seed)
    sol = constructive(inst)
    start = sol.total
    trace = local_search(sol, LocalSearchConfig(max_stall=150, validate_every=5),
                         np.random.default_rng(seed))
    assert sol.total <= start + 1e-9
    totals = [start] + [r.total for r in trace]
    assert all(b < a for a, b in zip(totals, totals[1:]))
    assert evaluate(sol).total == pytest.approx(sol.total, rel=1e-9)


def test_local_search_deterministic_with_stall_budget():
    inst = generate(preset("XS"), 3)
    cfg = LocalSearchConfig(max_stall=100)
    a, b = constructive(inst), constructive(inst)
    local_search(a, cfg, np.random.default_rng(5))
    local_search(b, cfg, np.random.default_rng(5))
    assert a.paths == b.paths and a.total == b.total


def test_zero_budget_is_noop():
    inst = generate(preset("XS"), 0)
    sol = constructive(inst)
    before = sol.total
    assert local_search(sol, LocalSearchConfig(time_limit=0)) == []
    assert local_search(sol, LocalSearchConfig(max_moves=0)) == []
    assert sol.total == before

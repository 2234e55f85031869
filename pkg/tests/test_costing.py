import pytest

from builders import build, commodity, platform, supplier, two_route, unit
from stpp.construct import constructive
from stpp.costing import (CostBreakdown, SolutionValidationError, commodity_arc_cost, evaluate,
                          running_breakdown)
from stpp.generator import generate, preset
from stpp.insertion import insert_bundle, remove_bundle
from stpp.model import Arc, ArcKind, Commodity, Location, LocationKind
from stpp.solution import Solution


def _arc(**kw):
    base = dict(id="a", tail="S", head="U", kind=ArcKind.DIRECT, travel_time=0, distance=100.0,
                capacity=2.0, bin_cost=50.0, carbon_cost=10.0)
    base.update(kw)
    return Arc(**base)


def _com(vol=1.0, rate=0.05):
    return Commodity("m", "p", "S", "U", 1, vol, 1, 1, rate)


def test_commodity_arc_cost_examples():
    u = Location("U", LocationKind.UNIT)
    assert commodity_arc_cost(_arc(distance=0.0), _com(vol=0.0), u) == 0.0
    assert commodity_arc_cost(_arc(), _com(), u) == pytest.approx(10.0)
    p = Location("P", LocationKind.PLATFORM, capacity=10, unit_cost=4.0, overload_cost=1.0)
    assert commodity_arc_cost(_arc(head="P"), _com(), p) == pytest.approx(12.0)
    out = _arc(outsourced=True, outsource_cost=6.0)
    assert commodity_arc_cost(out, _com(), u) == pytest.approx(13.0)


def test_empty_solution_costs_nothing():
    assert evaluate(Solution(two_route())).total == 0.0


def test_single_direct_bundle():
    locs = [supplier("S"), unit("U")]
    inst = build(locs, [("S", "U", {"cost": 40.0, "cap": 2.0, "co2": 4.0, "dist": 10.0})],
                 [commodity("m", "S", "U", 1, 0.5, q=2, rate=0.1)], horizon=2)
    sol = Solution(inst)
    insert_bundle(sol, 0)
    c = evaluate(sol)
    assert c.bin_cost == pytest.approx(40.0)
    assert c.commodity_cost == pytest.approx(2 * (0.25 * 4.0 + 10 * 0.1))
    assert c.total == pytest.approx(c.bin_cost + c.commodity_cost)


def test_platform_overload():
    locs = [supplier("S1"), supplier("S2"), platform("P", capacity=5.0, overload_cost=7.0), unit("U")]
    arcs = [("S1", "P", {"cap": 10.0}), ("S2", "P", {"cap": 10.0}), ("P", "U", {"cap": 10.0})]
    coms = [commodity("a", "S1", "U", 1, 4.0), commodity("b", "S2", "U", 1, 4.0)]
    inst = build(locs, arcs, coms, horizon=2)
    sol = constructive(inst)
    assert evaluate(sol).overload_cost == pytest.approx(21.0)
    assert sol.overload_cost == pytest.approx(21.0)


def test_horizon_overload_mode():
    inst = generate(preset("S"), 0)
    sol = constructive(inst)
    weekly = evaluate(sol).overload_cost
    horizon = evaluate(sol, overload_mode="horizon").overload_cost
    assert 0.0 <= horizon <= weekly + 1e-6
    with pytest.raises(ValueError):
        evaluate(sol, overload_mode="bogus")


def test_running_total_matches_scratch_after_mutations():
    inst = generate(preset("XS"), 4)
    sol = constructive(inst)
    for b in range(0, len(inst.bundles), 3):
        remove_bundle(sol, b)
        assert running_breakdown(sol).total == pytest.approx(evaluate(sol).total, rel=1e-9)
    for b in range(0, len(inst.bundles), 3):
        insert_bundle(sol, b)
    a, e = running_breakdown(sol), evaluate(sol)
    for f in ("bin_cost", "commodity_cost", "overload_cost"):
        assert getattr(a, f) == pytest.approx(getattr(e, f), rel=1e-6, abs=1e-6)


def test_invalid_manifest_reported():
    inst = two_route()
    sol = constructive(inst)
    key = next(iter(sol.manifests))
    sol.manifests[key].bins[0].load += 5.0
    with pytest.raises(SolutionValidationError) as err:
        evaluate(sol)
    assert err.value.violations


def test_bin_order_does_not_matter():
    inst = generate(preset("XS"), 5)
    sol = constructive(inst)
    before = evaluate(sol).total
    for m in sol.manifests.values():
        m.bins.reverse()
    assert evaluate(sol).total == pytest.approx(before)


def test_breakdown_dict():
    d = CostBreakdown(1.0, 2.0, 3.0).as_dict()
    assert d["total"] == 6.0

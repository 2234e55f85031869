import pytest

from builders import two_route
from stpp.construct import ProgressEvent, constructive, insertion_order, pack_all, solution_from_paths
from stpp.costing import evaluate, validate
from stpp.generator import generate, preset


def test_insertion_order_largest_item_first():
    inst = two_route(vol_a=0.2, vol_b=0.7)
    assert insertion_order(inst) == [1, 0]
    inst = two_route(vol_a=0.5, vol_b=0.5)
    assert insertion_order(inst) == [0, 1]


@pytest.mark.parametrize("name,seed", [("tiny", 0), ("XS", 0), ("XS", 7), ("frag", 0)])
def test_constructive_is_valid_and_deterministic(name, seed):
    inst = generate(preset(name), seed)
    a, b = constructive(inst), constructive(inst)
    assert validate(a) == []
    assert len(a.paths) == len(inst.bundles)
    assert a.paths == b.paths
    assert evaluate(a).total == pytest.approx(a.total)


def test_progress_events():
    inst = generate(preset("XS"), 0)
    events: list[ProgressEvent] = []
    sol = constructive(inst, progress=events.append)
    assert len(events) == len(inst.bundles)
    assert events[-1].total == pytest.approx(sol.total)
    assert all(e2.total >= e1.total - 1e-9 for e1, e2 in zip(events, events[1:]))


def test_solution_from_paths_reproduces_and_repacks():
    inst = generate(preset("XS"), 1)
    sol = constructive(inst)
    again = solution_from_paths(inst, sol.paths, repack=False)
    assert again.paths == sol.paths
    packed = solution_from_paths(inst, sol.paths)
    assert validate(packed) == []
    assert pack_all(packed) == pytest.approx(0.0, abs=1e-9)

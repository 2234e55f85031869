import json

import pytest
from hypothesis import given, settings, strategies as st

from stpp.construct import constructive
from stpp.costing import evaluate
from stpp.generator import generate, preset
from stpp.io import (InstanceValidationError, check_instance_dict, dumps, instance_from_dict,
                     instance_to_dict, load_instance, load_plan, plan_from_dict, plan_to_dict,
                     save_instance, write_plan)


@settings(max_examples=10)
@given(st.sampled_from(["tiny", "XS", "frag"]), st.integers(0, 1000))
def test_instance_round_trip(name, seed):
    inst = generate(preset(name), seed)
    doc = instance_to_dict(inst)
    assert check_instance_dict(doc) == []
    again = instance_from_dict(json.loads(dumps(doc)))
    assert dumps(instance_to_dict(again)) == dumps(doc)


def test_instance_file_round_trip(tmp_path):
    inst = generate(preset("XS"), 0)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_instance(inst, a)
    save_instance(load_instance(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_plan_round_trip(tmp_path):
    inst = generate(preset("XS"), 1)
    sol = constructive(inst)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_plan(sol, a)
    again, stored = load_plan(inst, a)
    write_plan(again, b)
    assert a.read_bytes() == b.read_bytes()
    assert evaluate(again).total == pytest.approx(stored.total, abs=1e-6)
    assert plan_to_dict(plan_from_dict(inst, plan_to_dict(sol))) == plan_to_dict(sol)


def _doc():
    return instance_to_dict(generate(preset("tiny"), 0))


def test_unknown_arc_endpoint_named():
    doc = _doc()
    arc = doc["arcs"][0]
    arc["head"] = "nowhere"
    with pytest.raises(InstanceValidationError) as err:
        instance_from_dict(doc)
    assert any(arc["id"] in v and "nowhere" in v for v in err.value.violations)


def test_oversize_commodity_rejected():
    doc = _doc()
    doc["commodities"][0]["volume"] = 1e6
    problems = check_instance_dict(doc)
    assert any("oversize" in p for p in problems)


def test_outsourced_must_be_collection():
    doc = _doc()
    arc = next(a for a in doc["arcs"] if a["kind"] != "collection")
    arc["outsourced"] = True
    arc["outsource_cost"] = 1.0
    assert any("outsourced" in p for p in check_instance_dict(doc))


def test_several_violations_reported_together():
    doc = _doc()
    doc["meta"]["horizon"] = 0
    doc["commodities"][0]["quantity"] = -1
    doc["arcs"][0]["capacity"] = 0
    assert len(check_instance_dict(doc)) >= 3


@pytest.mark.parametrize("seed", range(3))
def test_generated_volumes_mostly_in_range(seed):
    inst = generate(preset("XS"), seed)
    vols = [c.volume for c in inst.commodities]
    assert sum(1 <= v <= 4 for v in vols) >= 0.6 * len(vols)


def test_generator_deterministic():
    assert dumps(instance_to_dict(generate(preset("S"), 7))) == \
        dumps(instance_to_dict(generate(preset("S"), 7)))

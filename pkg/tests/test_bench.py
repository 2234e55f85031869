import pytest

from stpp.bench import (METHODS, average_heuristic, gap_table, median_by_method, run_benchmark,
                        shortest_heuristic)
from stpp.config import ILSConfig, LocalSearchConfig, PerturbConfig, SolverConfig
from stpp.costing import validate
from stpp.generator import generate, preset

FAST = SolverConfig(ils=ILSConfig(time_limit=20, rounds=1,
                                  local_search=LocalSearchConfig(max_stall=50),
                                  perturb=PerturbConfig(milp_time_limit=2, variable_budget=3000,
                                                        max_rounds=2, mip_rel_gap=0.01)))


@pytest.mark.parametrize("heuristic", [shortest_heuristic, average_heuristic])
def test_baselines_are_valid(heuristic):
    inst = generate(preset("XS"), 0)
    sol = heuristic(inst)
    assert validate(sol) == []
    assert len(sol.paths) == len(inst.bundles)


def test_benchmark_report_shape():
    insts = [generate(preset("tiny"), s) for s in (0, 1)]
    report = run_benchmark(insts, METHODS, seeds=(0, 1), config=FAST, full="never")
    assert len(report["rows"]) == 2 * len(METHODS) * 2
    for r in report["rows"]:
        assert r["cost"] >= r["bound"] - 1e-6
        assert r["gap"] >= -1e-9
        assert "elapsed" not in r
    med = median_by_method(report)
    assert set(med) == set(METHODS)
    table = gap_table(report)
    assert table.splitlines()[0].split()[:2] == ["instance", "method"]
    assert len(table.splitlines()) == 1 + len(report["summary"])


def test_benchmark_is_deterministic():
    inst = [generate(preset("tiny"), 3)]
    a = run_benchmark(inst, ("constructive", "ils"), (0,), FAST, full="never")
    b = run_benchmark(inst, ("constructive", "ils"), (0,), FAST, full="never")
    assert a == b

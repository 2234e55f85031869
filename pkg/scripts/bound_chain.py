"""Check linear <= mixed <= full <= brute-force optimum <= heuristics on tiny instances.

    python3 scripts/bound_chain.py --instances 100
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "tests"))

from oracles import brute_force_optimum  # noqa: E402
from stpp.bench import METHODS, run_method  # noqa: E402
from stpp.bounds import full_giant_bound, linear_bound, mixed_giant_bound  # noqa: E402
from stpp.config import ILSConfig, LocalSearchConfig, PerturbConfig, SolverConfig  # noqa: E402
from stpp.generator import generate, preset  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--preset", default="tiny")
    args = ap.parse_args()
    cfg = SolverConfig(ils=ILSConfig(time_limit=10, rounds=1,
                                     local_search=LocalSearchConfig(max_stall=80),
                                     perturb=PerturbConfig(milp_time_limit=2, max_rounds=2)))
    print(f"{'seed':>4} {'linear':>10} {'mixed':>10} {'full':>10} {'optimum':>10} {'best heur':>10}")
    for seed in range(args.instances):
        inst = generate(preset(args.preset), seed)
        mix = mixed_giant_bound(inst)
        chain = [linear_bound(inst).value, mix.value, full_giant_bound(inst, 60).value,
                 brute_force_optimum(inst),
                 min(run_method(inst, m, seed, cfg, mix).solution.total for m in METHODS)]
        flag = "" if all(a <= b + 1e-6 * max(1, abs(b)) for a, b in zip(chain, chain[1:])) else "  VIOLATED"
        print(f"{seed:>4} " + " ".join(f"{v:>10.2f}" for v in chain) + flag)


if __name__ == "__main__":
    main()

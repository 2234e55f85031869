"""Gap of bound rounding versus ILS on fragmentation-heavy instances.

    python3 scripts/rounding_vs_ils.py --seeds 0 1 2 --ils-seconds 150
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _desk import desk_config  # noqa: E402
from stpp.bench import run_method  # noqa: E402
from stpp.bounds import linear_bound, mixed_giant_bound  # noqa: E402
from stpp.costing import relative_gap  # noqa: E402
from stpp.generator import generate, preset  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="frag")
    ap.add_argument("--seeds", nargs="+", type=int, default=[0])
    ap.add_argument("--ils-seconds", type=float, default=150.0)
    args = ap.parse_args()
    cfg = desk_config(args.ils_seconds)
    print(f"{'seed':>4} {'bound':>12} {'lbr gap %':>10} {'constr gap %':>13} {'ils gap %':>10}")
    for seed in args.seeds:
        inst = generate(preset(args.preset), seed)
        mix = mixed_giant_bound(inst)
        bound = max(mix.value, linear_bound(inst).value)
        gaps = [relative_gap(run_method(inst, m, seed, cfg, mix).solution.total, bound)
                for m in ("lbr", "constructive", "ils")]
        print(f"{seed:>4} {bound:>12.2f} " + f"{100 * gaps[0]:>10.1f} {100 * gaps[1]:>13.1f} "
              f"{100 * gaps[2]:>10.1f}", flush=True)


if __name__ == "__main__":
    main()

"""Compare every method on generated instances and print the gap table.

    python3 scripts/method_ordering.py --preset M --seeds 0 1 2 3 4 --ils-seconds 180
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _desk import desk_config  # noqa: E402
from stpp.bench import METHODS, gap_table, median_by_method, run_benchmark  # noqa: E402
from stpp.generator import generate, preset  # noqa: E402
from stpp.io import write_report  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="M")
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--ils-seconds", type=float, default=180.0)
    ap.add_argument("--out", help="write the JSON report here")
    args = ap.parse_args()
    cfg = desk_config(args.ils_seconds)
    rows = []
    for seed in args.seeds:
        inst = generate(preset(args.preset), seed)
        rep = run_benchmark([inst], METHODS, (seed,), cfg, full="never", timing=True)
        rows += rep["rows"]
        print(gap_table(rep), flush=True)
    from stpp.bench import summarize
    report = {"rows": rows, "summary": summarize(rows)}
    print()
    for m, c in sorted(median_by_method(report).items(), key=lambda kv: kv[1]):
        print(f"{m:<13} median cost {c:14.2f}")
    if args.out:
        write_report(report, args.out)


if __name__ == "__main__":
    main()

"""Empirical FFD/BFD ratios against exact packing on random small instances.

    python3 scripts/ffd_guarantee.py --instances 5000 --max-items 12
"""
import argparse
import math
from collections import Counter

import numpy as np

from stpp.packing import bfd_pack, exact_pack, ffd_pack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=5000)
    ap.add_argument("--max-items", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    excess = Counter()
    worst = 0
    for _ in range(args.instances):
        n = int(rng.integers(1, args.max_items + 1))
        items = [(i, float(v), 1) for i, v in enumerate(np.round(rng.uniform(0.02, 1.0, n), 3))]
        opt = exact_pack(items, 1.0)
        ffd, bfd = ffd_pack(items, 1.0).n_bins, bfd_pack(items, 1.0).n_bins
        excess[(ffd - opt, bfd - opt)] += 1
        worst = max(worst, ffd - math.ceil(11 / 9 * opt + 6 / 9))
    for (f, b), c in sorted(excess.items()):
        print(f"ffd +{f} bfd +{b}: {c}")
    print("bound violated" if worst > 0 else "FFD within 11/9 OPT + 6/9 on every instance")


if __name__ == "__main__":
    main()

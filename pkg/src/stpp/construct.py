"""Greedy construction: insert bundles one at a time, largest packaging size first."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .insertion import insert_bundle
from .model import Instance, TTArc
from .packing import best_pack
from .solution import Solution

log = logging.getLogger(__name__)


@dataclass
class ProgressEvent:
    step: int
    bundle: str
    path_cost: float
    total: float


def insertion_order(instance: Instance) -> list[int]:
    """Bundles by decreasing largest item volume, ties by bundle id."""
    return sorted(range(len(instance.bundles)),
                  key=lambda b: (-instance.bundles[b].max_item_volume, instance.bundles[b].id))


def constructive(instance: Instance,
                 progress: Optional[Callable[[ProgressEvent], None]] = None,
                 order: Optional[Sequence[int]] = None) -> Solution:
    solution = Solution(instance)
    for step, b in enumerate(order if order is not None else insertion_order(instance)):
        res = insert_bundle(solution, b)
        if progress is not None:
            progress(ProgressEvent(step, instance.bundles[b].id, res.cost, solution.total))
    log.debug("constructive: %d bundles, cost %.2f", len(instance.bundles), solution.total)
    return solution


def pack_all(solution: Solution) -> float:
    """Repack every consolidated timed arc from scratch with the better of FFD/BFD."""
    inst = solution.instance
    vols = {i: c.volume for i, c in enumerate(inst.commodities)}
    before = solution.total
    for key in sorted(solution.manifests):
        m = solution.manifests[key]
        solution.set_manifest(key, best_pack(m.items(vols), m.capacity, m.max_bins))
    return solution.total - before


def solution_from_paths(instance: Instance, paths: Mapping[int, Sequence[TTArc]],
                        repack: bool = True) -> Solution:
    """Fix the given bundle paths, then bin-pack every arc."""
    solution = Solution(instance)
    for b in insertion_order(instance):
        if b in paths:
            solution.assign(b, paths[b])
    if repack:
        pack_all(solution)
    return solution

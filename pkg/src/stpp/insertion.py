"""Minimum-cost insertion of one bundle: shortest elementary path on its subgraph."""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .model import (SHORTCUT, BundleGraph, InfeasibleBundleError, Instance, TTArc,
                    is_elementary, topological_order)
from .packing import EPS, count_new_bins
from .solution import Solution

Weight = Callable[[TTArc], float]


class BundleNotPresentError(KeyError):
    pass


@dataclass
class InsertionResult:
    bundle: int
    path: list[TTArc]
    cost: float  # path cost under the weights used for the search
    delta: float  # realised change of the solution total
    method: str  # "dijkstra" | "label" | "empty"


# -- arc weights ---------------------------------------------------------------

def arc_insertion_cost(alpha: TTArc, bundle: int, solution: Solution,
                       orders: Optional[Sequence[int]] = None) -> float:
    """Marginal cost of routing the bundle's orders over ``alpha``.

    Commodity terms plus marginal platform overload plus one bin cost per
    bin that first-fit has to open on top of the current manifest.  Returns
    ``inf`` when the arc's bin limit would be exceeded.
    """
    if alpha.arc == SHORTCUT:
        return 0.0
    inst = solution.instance
    net = inst.network
    a = alpha.arc
    arc = net.arcs[a]
    head = net.arc_head[a]
    head_loc = net.locations[head]
    platform = net.is_platform(head)
    rate = net.volume_rate[a]
    horizon, steps = inst.horizon, inst.steps
    remaining = steps - alpha.tail[1]
    tau = arc.travel_time
    cost = 0.0
    if orders is None:
        orders = inst.bundles[bundle].orders
    for o in orders:
        order = inst.orders[o]
        week = (order.week - remaining - 1) % horizon + 1
        cost += order.volume * rate + arc.distance * order.capital
        if platform and head_loc.capacity is not None and head_loc.overload_cost:
            before = solution.inbound.get((head, (week + tau - 1) % horizon + 1), 0.0)
            cap = head_loc.capacity
            cost += head_loc.overload_cost * (
                max(0.0, before + order.volume - cap) - max(0.0, before - cap))
        if arc.consolidated:
            if order.units and order.units[0] > arc.capacity * (1 + EPS):
                return math.inf
            m = solution.manifests.get((a, week))
            loads = [b.load for b in m.bins] if m is not None else ()
            new = count_new_bins(loads, order.units, arc.capacity)
            if arc.max_bins is not None and len(loads) + new > arc.max_bins:
                return math.inf
            cost += new * arc.bin_cost
    return cost


def insertion_weight(solution: Solution, bundle: int) -> Weight:
    memo: dict[TTArc, float] = {}

    def w(alpha: TTArc) -> float:
        v = memo.get(alpha)
        if v is None:
            v = arc_insertion_cost(alpha, bundle, solution)
            memo[alpha] = v
        return v

    return w


def liquid_weight(instance: Instance, bundle: int, mixed: bool = False) -> Weight:
    """Bin cost charged pro rata to volume; ``mixed`` rounds up on direct arcs."""
    from .model import ArcKind
    net = instance.network
    orders = [instance.orders[o] for o in instance.bundles[bundle].orders]
    memo: dict[TTArc, float] = {}

    def w(alpha: TTArc) -> float:
        if alpha.arc == SHORTCUT:
            return 0.0
        v = memo.get(alpha)
        if v is not None:
            return v
        arc = net.arcs[alpha.arc]
        v = 0.0
        for o in orders:
            v += o.volume * net.volume_rate[alpha.arc] + arc.distance * o.capital
            if arc.consolidated:
                if mixed and arc.kind is ArcKind.DIRECT:
                    v += math.ceil(o.volume / arc.capacity - 1e-9) * arc.bin_cost
                else:
                    v += o.volume / arc.capacity * arc.bin_cost
        memo[alpha] = v
        return v

    return w


def distance_weight(instance: Instance) -> Weight:
    net = instance.network
    return lambda alpha: 0.0 if alpha.arc == SHORTCUT else net.arcs[alpha.arc].distance


# -- path searches -------------------------------------------------------------

def dijkstra(graph: BundleGraph, weight: Weight) -> tuple[float, list[TTArc]]:
    dist = {graph.source: 0.0}
    pred: dict = {}
    done = set()
    counter = itertools.count()
    heap = [(0.0, next(counter), graph.source)]
    while heap:
        d, _, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == graph.sink:
            break
        for alpha in graph.out.get(node, ()):
            w = weight(alpha)
            if w == math.inf:
                continue
            nd = d + w
            h = alpha.head
            if nd < dist.get(h, math.inf) - 1e-12:
                dist[h] = nd
                pred[h] = alpha
                heapq.heappush(heap, (nd, next(counter), h))
    if graph.sink not in done:
        return math.inf, []
    path = []
    node = graph.sink
    while node != graph.source:
        alpha = pred[node]
        path.append(alpha)
        node = alpha.tail
    path.reverse()
    return dist[graph.sink], path


def elementary_dijkstra(graph: BundleGraph, weight: Weight, instance: Instance,
                        ) -> tuple[float, list[TTArc]]:
    """Exact label-setting search with a visited-platform bitmask.

    The subgraph is acyclic, so labels are extended in topological order and
    pruned by dominance (lower cost and subset of visited platforms).
    """
    bit = {p: 1 << i for i, p in enumerate(graph.platforms)}
    net = instance.network
    labels: dict = {graph.source: [(0.0, 0, None, None)]}  # cost, mask, arc, parent label
    for node in topological_order(graph.nodes, graph.arcs):
        here = labels.get(node)
        if not here or node == graph.sink:
            continue
        for alpha in graph.out.get(node, ()):
            w = weight(alpha)
            if w == math.inf:
                continue
            head = alpha.head
            b = bit.get(head[0], 0) if alpha.arc != SHORTCUT and net.is_platform(head[0]) else 0
            bucket = labels.setdefault(head, [])
            for lab in here:
                cost, mask, _, _ = lab
                if b & mask:
                    continue
                new = (cost + w, mask | b, alpha, lab)
                if any(c <= new[0] + 1e-12 and (m | new[1]) == new[1] for c, m, _, _ in bucket):
                    continue
                bucket[:] = [l for l in bucket
                             if not (new[0] <= l[0] + 1e-12 and (l[1] | new[1]) == l[1])]
                bucket.append(new)
    final = labels.get(graph.sink)
    if not final:
        return math.inf, []
    best = min(final, key=lambda l: l[0])
    path = []
    lab = best
    while lab[2] is not None:
        path.append(lab[2])
        lab = lab[3]
    path.reverse()
    return best[0], path


def best_elementary_path(graph: BundleGraph, weight: Weight, instance: Instance,
                         ) -> tuple[float, list[TTArc], str]:
    cost, path = dijkstra(graph, weight)
    if path and not is_elementary(instance.network, path):
        cost, path = elementary_dijkstra(graph, weight, instance)
        return cost, path, "label"
    return cost, path, "dijkstra"


def enumerate_paths(graph: BundleGraph, instance: Instance,
                    limit: Optional[int] = None) -> list[list[TTArc]]:
    """All elementary source-sink paths (depth-first, deterministic order)."""
    net = instance.network
    out: list[list[TTArc]] = []
    stack: list[TTArc] = []
    visited: set[int] = set()

    def dfs(node) -> bool:
        if node == graph.sink:
            out.append(list(stack))
            return limit is not None and len(out) >= limit
        for alpha in graph.out.get(node, ()):
            p = alpha.head[0]
            plat = alpha.arc != SHORTCUT and net.is_platform(p)
            if plat and p in visited:
                continue
            if plat:
                visited.add(p)
            stack.append(alpha)
            stop = dfs(alpha.head)
            stack.pop()
            if plat:
                visited.discard(p)
            if stop:
                return True
        return False

    dfs(graph.source)
    return out


def path_cost(path: Sequence[TTArc], weight: Weight) -> float:
    return sum(weight(a) for a in path)


# -- insertion / removal -------------------------------------------------------

def insert_bundle(solution: Solution, bundle: int, fallback: str = "label") -> InsertionResult:
    """Insert ``bundle`` on its cheapest elementary path given current manifests.

    ``fallback`` selects what happens when the unconstrained shortest path
    revisits a platform: ``"label"`` runs the exact bitmask search against the
    current solution, ``"empty"`` first retries with weights of an empty
    solution and only then falls back to the exact search.
    """
    inst = solution.instance
    if bundle in solution.paths:
        raise ValueError(f"bundle {inst.bundles[bundle].id} already inserted")
    graph = inst.bundle_graph(bundle)
    weight = insertion_weight(solution, bundle)
    cost, path = dijkstra(graph, weight)
    method = "dijkstra"
    if path and not is_elementary(inst.network, path):
        if fallback == "empty":
            empty_w = insertion_weight(Solution(inst), bundle)
            _, cand = dijkstra(graph, empty_w)
            if cand and is_elementary(inst.network, cand):
                path, cost, method = cand, path_cost(cand, weight), "empty"
        if method == "dijkstra":
            cost, path = elementary_dijkstra(graph, weight, inst)
            method = "label"
    if not path:
        raise InfeasibleBundleError(inst.bundles[bundle].id, "no path with finite cost")
    delta = solution.assign(bundle, path)
    return InsertionResult(bundle, path, cost, delta, method)


def insert_along_path(solution: Solution, bundle: int, path: Sequence[TTArc]) -> float:
    return solution.assign(bundle, path)


def remove_bundle(solution: Solution, bundle: int, refill: bool = False) -> float:
    """Take the bundle out of every manifest on its path; returns the cost delta.

    Emptied bins are dropped.  With ``refill`` the remaining contents of each
    touched arc are repacked with FFD when that saves bins.
    """
    if bundle not in solution.paths:
        raise BundleNotPresentError(solution.instance.bundles[bundle].id)
    keys = solution.projected_keys(bundle) if refill else ()
    delta = solution.unassign(bundle)
    if refill:
        from .local_search import repack
        delta += repack(solution, keys, use_bfd=False)
    return delta

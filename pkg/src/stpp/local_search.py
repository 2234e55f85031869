"""Improvement neighbourhoods and the accept-if-improving descent loop.

Three moves are sampled at random:

* repack: re-run FFD/BFD on bin manifests, keep whichever uses fewest bins;
* reinsert: pull one bundle out and insert it again at minimum cost;
* consolidate: reroute every bundle that travels from node ``u`` to node
  ``v`` through one shared cheapest segment, then reinsert each of them.

Rejected moves are undone through the solution journal, so the state after a
rejection is identical to the state before the move.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .config import LocalSearchConfig
from .costing import SolutionValidationError, validate
from .insertion import insert_bundle
from .model import SHORTCUT, TTArc, path_nodes, wrap_week
from .packing import EPS, CapacityExhaustedError, bfd_pack, bp_lower_bound, count_new_bins, ffd_pack
from .solution import Key, Solution

log = logging.getLogger(__name__)

IMPROVE = 1e-9  # minimum decrease that counts as an improvement
MOVES = ("repack", "reinsert", "consolidate")


@dataclass
class TraceRecord:
    phase: str
    move: str
    delta: float
    total: float
    elapsed: float


# -- repack -------------------------------------------------------------------

def repack(solution: Solution, keys: Optional[Iterable[Key]] = None, use_bfd: bool = True) -> float:
    """Repack manifests on ``keys`` (all by default); bin counts never grow."""
    inst = solution.instance
    vols = {i: c.volume for i, c in enumerate(inst.commodities)}
    before = solution.total
    for key in sorted(solution.manifests if keys is None else keys):
        m = solution.manifests.get(key)
        if m is None:
            continue
        items = m.items(vols)
        if m.n_bins <= bp_lower_bound(items, m.capacity):
            continue
        best = m
        packers = (ffd_pack, bfd_pack) if use_bfd else (ffd_pack,)
        for pack in packers:
            try:
                cand = pack(items, m.capacity, m.max_bins)
            except CapacityExhaustedError:
                continue
            if cand.n_bins < best.n_bins:
                best = cand
        if best is not m:
            solution.set_manifest(key, best)
    return solution.total - before


# -- reinsert -----------------------------------------------------------------

def reinsert(solution: Solution, bundle: int) -> float:
    """Remove and reinsert ``bundle``; keeps the change only if it saves cost."""
    solution.checkpoint()
    delta = solution.unassign(bundle)
    delta += insert_bundle(solution, bundle).delta
    if delta < -IMPROVE:
        solution.commit()
        return delta
    solution.rollback()
    return 0.0


# -- consolidate and refine -----------------------------------------------------

@dataclass(frozen=True)
class Visit:
    bundle: int
    start: int  # node position of u on the bundle path
    end: int  # node position of v


def node_pairs(solution: Solution, min_bundles: int = 2) -> dict[tuple[int, int], list[Visit]]:
    """Pairs (platform u, platform-or-unit v) traversed in this order by several bundles."""
    net = solution.instance.network
    index: dict[tuple[int, int], list[Visit]] = defaultdict(list)
    for b in sorted(solution.paths):
        nodes = path_nodes(solution.paths[b])
        stops = [i for i, (v, _) in enumerate(nodes) if net.is_platform(v)]
        stops_end = stops + [len(nodes) - 1]
        for x, i in enumerate(stops):
            for j in stops_end[x + 1:]:
                index[(nodes[i][0], nodes[j][0])].append(Visit(b, i, j))
    return {k: v for k, v in sorted(index.items()) if len(v) >= min_bundles}


def _joint_cost(solution: Solution, arc: int, tails: list[tuple[int, int]]) -> float:
    """Marginal cost of sending several bundles over ``arc`` at once.

    ``tails`` lists ``(bundle, tail step)``; unlike summing single-bundle
    insertion costs, bins are shared between the bundles.
    """
    inst = solution.instance
    net = inst.network
    a = net.arcs[arc]
    head = net.arc_head[arc]
    head_loc = net.locations[head]
    cost = 0.0
    units: dict[int, list[float]] = defaultdict(list)
    inbound: dict[int, float] = defaultdict(float)
    for b, t in tails:
        remaining = inst.steps - t
        for o in inst.bundles[b].orders:
            order = inst.orders[o]
            week = wrap_week(order.week - remaining, inst.horizon)
            cost += order.volume * net.volume_rate[arc] + a.distance * order.capital
            if net.is_platform(head):
                inbound[wrap_week(week + a.travel_time, inst.horizon)] += order.volume
            if a.consolidated:
                units[week].extend(order.units)
    if head_loc.capacity is not None and head_loc.overload_cost:
        for w, vol in inbound.items():
            before = solution.inbound.get((head, w), 0.0)
            cap = head_loc.capacity
            cost += head_loc.overload_cost * (max(0.0, before + vol - cap) - max(0.0, before - cap))
    for week, us in units.items():
        us.sort(reverse=True)
        if us[0] > a.capacity * (1 + EPS):
            return math.inf
        m = solution.manifests.get((arc, week))
        loads = [x.load for x in m.bins] if m is not None else ()
        new = count_new_bins(loads, us, a.capacity)
        if a.max_bins is not None and len(loads) + new > a.max_bins:
            return math.inf
        cost += new * a.bin_cost
    return cost


def _shared_segment(solution: Solution, u: int, v: int, ends: dict[int, int], horizon: int,
                    forbidden: set[int]):
    """Cheapest joint ``u -> v`` segment lasting at most ``horizon`` steps.

    Search runs backwards from ``(v, 0)`` over nodes ``(location, steps to v)``;
    ``ends`` maps each bundle to the step at which it reaches ``v``.
    """
    net = solution.instance.network
    dist = {(v, 0): 0.0}
    pred: dict = {}
    done = set()
    heap = [(0.0, (v, 0))]
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        y, h = node
        if y == u:
            continue
        for i in net.in_arcs[y]:
            x = net.arc_tail[i]
            if x != u and (not net.is_platform(x) or x in forbidden or x == v):
                continue
            ht = h + net.arcs[i].travel_time
            if ht > horizon or (x, ht) in done:
                continue
            w = _joint_cost(solution, i, [(b, t - ht) for b, t in ends.items()])
            if w == math.inf:
                continue
            nd = d + w
            if nd < dist.get((x, ht), math.inf) - 1e-12:
                dist[(x, ht)] = nd
                pred[(x, ht)] = (i, node)
                heapq.heappush(heap, (nd, (x, ht)))
    starts = [(dist[n], n[1]) for n in dist if n[0] == u]
    if not starts:
        return None
    cost, h0 = min(starts)
    seg = []  # (arc, steps-to-v at tail, steps-to-v at head)
    node = (u, h0)
    while node != (v, 0):
        i, nxt = pred[node]
        seg.append((i, node[1], nxt[1]))
        node = nxt
    locs = [net.arc_head[i] for i, _, _ in seg]
    if len(set(locs)) != len(locs):
        return None
    return cost, h0, seg


def consolidate_and_refine(solution: Solution, pair: tuple[int, int],
                           visits: Optional[list[Visit]] = None) -> float:
    """Reroute all bundles going from ``pair[0]`` to ``pair[1]`` through one segment."""
    u, v = pair
    if visits is None:
        visits = node_pairs(solution).get(pair, [])
    if len(visits) < 2:
        return 0.0
    inst = solution.instance
    net = inst.network
    before = solution.total
    solution.checkpoint()
    old = {}
    forbidden: set[int] = set()
    ends: dict[int, int] = {}
    span = math.inf
    for vis in visits:
        path = solution.paths[vis.bundle]
        nodes = path_nodes(path)
        old[vis.bundle] = (path, vis)
        ends[vis.bundle] = nodes[vis.end][1]
        span = min(span, nodes[vis.end][1] - nodes[vis.start][1])
        for x, _ in nodes[:vis.start] + nodes[vis.end + 1:]:
            if net.is_platform(x):
                forbidden.add(x)
        solution.unassign(vis.bundle)
    found = _shared_segment(solution, u, v, ends, int(span), forbidden)
    if found is None:
        solution.rollback()
        return 0.0
    _, length, seg = found
    members = sorted(old, key=lambda b: (-inst.bundles[b].max_item_volume, inst.bundles[b].id))
    for b in members:
        path, vis = old[b]
        t_v = ends[b]
        shift = (t_v - path_nodes(path)[vis.start][1]) - length
        src = path[0].tail
        new = [TTArc(SHORTCUT, (src[0], src[1] + k), (src[0], src[1] + k + 1)) for k in range(shift)]
        new += [TTArc(a.arc, (a.tail[0], a.tail[1] + shift), (a.head[0], a.head[1] + shift))
                for a in path[:vis.start]]
        new += [TTArc(i, (net.arc_tail[i], t_v - ht), (net.arc_head[i], t_v - hh))
                for i, ht, hh in seg]
        new += path[vis.end:]
        solution.assign(b, new)
    for b in members:
        solution.checkpoint()
        d = solution.unassign(b)
        d += insert_bundle(solution, b).delta
        if d < -IMPROVE:
            solution.commit()
        else:
            solution.rollback()
    delta = solution.total - before
    if delta < -IMPROVE:
        solution.commit()
        return delta
    solution.rollback()
    return 0.0


# -- descent loop ---------------------------------------------------------------

def local_search(solution: Solution, config: Optional[LocalSearchConfig] = None,
                 rng: Optional[np.random.Generator] = None, phase: str = "ls",
                 clock_start: Optional[float] = None) -> list[TraceRecord]:
    """Sample moves until the time, move or stall budget runs out.

    The solution is modified in place; one trace record per accepted move.
    """
    config = config or LocalSearchConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    t0 = time.perf_counter()
    origin = clock_start if clock_start is not None else t0
    trace: list[TraceRecord] = []
    if config.time_limit <= 0 or not solution.paths:
        return trace
    w = np.asarray(config.weights, dtype=float)
    p = w / w.sum()
    bundles = sorted(solution.paths)
    moves = stall = accepted = 0
    while True:
        if time.perf_counter() - t0 >= config.time_limit:
            break
        if config.max_moves is not None and moves >= config.max_moves:
            break
        if config.max_stall is not None and stall >= config.max_stall:
            break
        moves += 1
        kind = MOVES[int(rng.choice(3, p=p))]
        if kind == "repack":
            delta = repack(solution)
        elif kind == "reinsert":
            delta = reinsert(solution, bundles[int(rng.integers(len(bundles)))])
        else:
            pairs = node_pairs(solution)
            if pairs:
                keys = list(pairs)
                k = keys[int(rng.integers(len(keys)))]
                delta = consolidate_and_refine(solution, k, pairs[k])
            else:
                delta = 0.0
        if delta < -IMPROVE:
            stall = 0
            accepted += 1
            trace.append(TraceRecord(phase, kind, delta, solution.total,
                                     time.perf_counter() - origin))
            if config.validate_every and accepted % config.validate_every == 0:
                problems = validate(solution)
                if problems:
                    raise SolutionValidationError(problems)
        else:
            stall += 1
    log.debug("local search: %d moves, %d accepted, cost %.2f", moves, accepted, solution.total)
    return trace

"""Exact network cost: bins on consolidated arcs, per-commodity terms, overloads."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

from .model import SHORTCUT, Arc, Commodity, Location, Network, is_elementary
from .solution import Solution


class SolutionValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations[:10]) + (
            f" (+{len(violations) - 10} more)" if len(violations) > 10 else ""))
        self.violations = violations


@dataclass(frozen=True)
class CostBreakdown:
    bin_cost: float = 0.0
    commodity_cost: float = 0.0
    overload_cost: float = 0.0

    @property
    def total(self) -> float:
        return self.bin_cost + self.commodity_cost + self.overload_cost

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


def commodity_arc_cost(arc: Arc, commodity: Commodity, head: Location) -> float:
    """Per-unit cost of moving one unit of ``commodity`` on ``arc``."""
    share = commodity.volume / arc.capacity
    cost = share * arc.carbon_cost + arc.distance * commodity.capital_rate
    if head.is_platform:
        cost += share * (head.unit_cost or 0.0)
    if arc.outsourced:
        cost += share * (arc.outsource_cost or 0.0)
    return cost


def flows(solution: Solution) -> dict[tuple[int, int], dict[int, int]]:
    """Units per commodity on every timed arc ``(arc, tail_week)``."""
    inst = solution.instance
    out: dict[tuple[int, int], dict[int, int]] = defaultdict(dict)
    for b, path in sorted(solution.paths.items()):
        for o in inst.bundles[b].orders:
            order = inst.orders[o]
            for alpha in path:
                ta = inst.project(alpha, order)
                if ta is None:
                    continue
                f = out[(ta.arc, ta.tail_week)]
                for m in order.commodities:
                    f[m] = f.get(m, 0) + inst.commodities[m].quantity
    return out


def validate(solution: Solution) -> list[str]:
    inst = solution.instance
    net = inst.network
    problems = []
    for b, path in sorted(solution.paths.items()):
        g = inst.bundle_graph(b)
        bid = inst.bundles[b].id
        if not path:
            problems.append(f"bundle {bid}: empty path")
            continue
        if path[0].tail != g.source or path[-1].head != g.sink:
            problems.append(f"bundle {bid}: path does not join source to sink")
        for x, y in zip(path, path[1:]):
            if x.head != y.tail:
                problems.append(f"bundle {bid}: path is not contiguous")
                break
        arcs = set(g.arcs)
        if any(a not in arcs for a in path):
            problems.append(f"bundle {bid}: path leaves the bundle graph")
        if not is_elementary(net, path):
            problems.append(f"bundle {bid}: path revisits a platform")
    fl = flows(solution)
    vols = {i: c.volume for i, c in enumerate(inst.commodities)}
    for key, m in solution.manifests.items():
        for p in m.violations(vols):
            problems.append(f"arc {net.arcs[key[0]].id} week {key[1]}: {p}")
        if m.units() != fl.get(key, {}):
            problems.append(f"arc {net.arcs[key[0]].id} week {key[1]}: manifest != flow")
    for key, f in fl.items():
        if net.arcs[key[0]].consolidated and f and key not in solution.manifests:
            problems.append(f"arc {net.arcs[key[0]].id} week {key[1]}: flow without bins")
    return problems


def evaluate(solution: Solution, check: bool = True,
             overload_mode: str = "weekly") -> CostBreakdown:
    """Recompute the cost from scratch.

    ``overload_mode="horizon"`` compares total inbound volume over the horizon
    against ``capacity * horizon`` instead of week by week (experimental; the
    running totals kept by :class:`Solution` always use the weekly reading).
    """
    if check:
        problems = validate(solution)
        if problems:
            raise SolutionValidationError(problems)
    inst = solution.instance
    net = inst.network
    bin_cost = sum(net.arcs[k[0]].bin_cost * m.n_bins
                   for k, m in sorted(solution.manifests.items()))
    commodity = 0.0
    inbound: dict[tuple[int, int], float] = defaultdict(float)
    for key, f in sorted(flows(solution).items()):
        arc = net.arcs[key[0]]
        head = net.locations[net.arc_head[key[0]]]
        for m, units in sorted(f.items()):
            c = inst.commodities[m]
            commodity += units * commodity_arc_cost(arc, c, head)
            if head.is_platform:
                week = (key[1] + arc.travel_time - 1) % inst.horizon + 1
                inbound[(net.arc_head[key[0]], week)] += units * c.volume
    overload = 0.0
    if overload_mode == "weekly":
        for (p, _), vol in sorted(inbound.items()):
            loc = net.locations[p]
            if loc.capacity is not None:
                overload += (loc.overload_cost or 0.0) * max(0.0, vol - loc.capacity)
    elif overload_mode == "horizon":
        per_platform: dict[int, float] = defaultdict(float)
        for (p, _), vol in inbound.items():
            per_platform[p] += vol
        for p, vol in per_platform.items():
            loc = net.locations[p]
            if loc.capacity is not None:
                overload += (loc.overload_cost or 0.0) * max(
                    0.0, vol - loc.capacity * inst.horizon)
    else:
        raise ValueError(f"unknown overload mode {overload_mode!r}")
    return CostBreakdown(bin_cost, commodity, overload)


def running_breakdown(solution: Solution) -> CostBreakdown:
    return CostBreakdown(solution.bin_cost, solution.commodity_cost, solution.overload_cost)


def relative_gap(cost: float, bound: float) -> float:
    if bound <= 0:
        return math.inf if cost > 0 else 0.0
    return (cost - bound) / bound

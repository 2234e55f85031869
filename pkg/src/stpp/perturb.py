"""Large-neighbourhood perturbations solved as giant-container MILPs.

A subset of bundles is taken out of the current solution and rerouted jointly
by a MILP in which each timed arc buys an integer number of bins large enough
for the total volume crossing it (the "giant container" relaxation of bin
packing).  Bundles outside the subset stay fixed and contribute residual
volume.  Bin costs are slope-scaled by the current packing efficiency of each
arc so the relaxation does not underrate arcs that pack poorly.

Two formulations are provided: arc-flow variables over each bundle's
travel-time subgraph, and path-choice variables over a few candidate paths.
"""
from __future__ import annotations

import logging
import math
import time
import weakref
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .config import ILSConfig, PerturbConfig
from .construct import constructive, insertion_order
from .insertion import dijkstra, liquid_weight
from .local_search import TraceRecord, local_search, repack
from .milp import MilpModel, MilpResult, solve_milp
from .model import SHORTCUT, ArcKind, Instance, TTArc, is_elementary
from .solution import Solution

log = logging.getLogger(__name__)

FLOW_FAMILIES = ("single_plant", "single_supplier", "random")
PATH_FAMILIES = ("attract", "reduce", "directs")


class BudgetExceededError(ValueError):
    pass


class PathEnumerationError(ValueError):
    pass


# -- slope scaling ---------------------------------------------------------------

def slope_scale(bin_cost: float, bins: int, volume: float, capacity: float) -> float:
    """Bin cost rescaled by current bins over the volume lower bound on bins."""
    if bins <= 0 or volume <= 0:
        return bin_cost
    need = math.ceil(volume / capacity - 1e-9)
    return bin_cost * bins / max(1, need)


def scaled_cost(solution: Solution, key: tuple[int, int]) -> float:
    arc = solution.instance.network.arcs[key[0]]
    m = solution.manifests.get(key)
    if m is None:
        return arc.bin_cost
    return slope_scale(arc.bin_cost, m.n_bins, m.volume(), arc.capacity)


# -- model construction ------------------------------------------------------------

@dataclass
class Contribution:
    """What choosing one variable puts on the network."""
    cost: float = 0.0  # commodity terms
    keys: dict = field(default_factory=lambda: defaultdict(float))  # (arc, week) -> volume
    inbound: dict = field(default_factory=lambda: defaultdict(float))  # (platform, week) -> volume


def arc_contribution(instance: Instance, bundle: int, alpha: TTArc, into: Optional[Contribution] = None
                     ) -> Contribution:
    c = into if into is not None else Contribution()
    if alpha.arc == SHORTCUT:
        return c
    net = instance.network
    arc = net.arcs[alpha.arc]
    head = net.arc_head[alpha.arc]
    plat = net.is_platform(head)
    for o in instance.bundles[bundle].orders:
        order = instance.orders[o]
        ta = instance.project(alpha, order)
        c.cost += order.volume * net.volume_rate[alpha.arc] + arc.distance * order.capital
        if arc.consolidated:
            c.keys[(ta.arc, ta.tail_week)] += order.volume
        if plat:
            c.inbound[(head, ta.head_week)] += order.volume
    return c


def path_contribution(instance: Instance, bundle: int, path: Sequence[TTArc]) -> Contribution:
    c = Contribution()
    for alpha in path:
        arc_contribution(instance, bundle, alpha, c)
    return c


@dataclass
class PerturbationMilp:
    kind: str  # "flow" | "path"
    bundles: list[int]
    model: MilpModel
    choices: list[tuple[int, object]]  # per x variable: (bundle, TTArc or path index)
    paths: dict[int, list[list[TTArc]]] = field(default_factory=dict)
    scaled: bool = True

    @property
    def n_vars(self) -> int:
        return self.model.n_vars

    def decode(self, x) -> dict[int, list[TTArc]]:
        picked: dict[int, list] = defaultdict(list)
        for j, (b, what) in enumerate(self.choices):
            if x[j] > 0.5:
                picked[b].append(what)
        out = {}
        for b in self.bundles:
            if self.kind == "path":
                (i,) = picked[b]
                out[b] = self.paths[b][i]
            else:
                out[b] = _walk(picked[b], b)
        return out


def _walk(arcs: list[TTArc], b: int) -> list[TTArc]:
    nxt = {a.tail: a for a in arcs}
    start = [a for a in arcs if a.tail not in {x.head for x in arcs}]
    if len(start) != 1:
        raise ValueError(f"bundle {b}: selected arcs do not form a single path")
    path = []
    node = start[0].tail
    while node in nxt:
        a = nxt.pop(node)
        path.append(a)
        node = a.head
    if nxt:
        raise ValueError(f"bundle {b}: selected arcs contain a detached cycle")
    return path


def _residuals(solution: Solution, bundles: Sequence[int]):
    """Volumes left on timed arcs and platforms once ``bundles`` are removed."""
    inst = solution.instance
    keys = {k: m.volume() for k, m in solution.manifests.items()}
    inbound = dict(solution.inbound)
    for b in bundles:
        if b not in solution.paths:
            continue
        c = path_contribution(inst, b, solution.paths[b])
        for k, v in c.keys.items():
            keys[k] = keys.get(k, 0.0) - v
        for k, v in c.inbound.items():
            inbound[k] = inbound.get(k, 0.0) - v
    return keys, inbound


def _assemble(solution: Solution, kind: str, bundles: list[int],
              options: dict[int, list[tuple[object, Contribution]]],
              scaled: bool, overload: bool) -> tuple[MilpModel, list]:
    """Shared giant-container and overload blocks over per-variable contributions."""
    inst = solution.instance
    net = inst.network
    model = MilpModel()
    choices = []
    key_terms: dict = defaultdict(list)
    node_terms: dict = defaultdict(list)
    for b in bundles:
        for what, c in options[b]:
            j = model.add_var(f"x_{b}_{len(choices)}", c.cost, 0.0, 1.0, integer=True)
            choices.append((b, what))
            for k, v in c.keys.items():
                key_terms[k].append((j, v))
            for k, v in c.inbound.items():
                node_terms[k].append((j, v))
    residual_keys, residual_in = _residuals(solution, bundles)
    for k in sorted(key_terms):
        arc = net.arcs[k[0]]
        cost = scaled_cost(solution, k) if scaled else arc.bin_cost
        ub = arc.max_bins if arc.max_bins is not None else math.inf
        t = model.add_var(f"bins_{k[0]}_{k[1]}", cost, 0.0, ub, integer=True)
        row = {t: arc.capacity}
        for j, v in key_terms[k]:
            row[j] = row.get(j, 0.0) - v
        model.add_row(row, lb=max(0.0, residual_keys.get(k, 0.0)), name=f"giant_{k[0]}_{k[1]}")
    if overload:
        for k in sorted(node_terms):
            loc = net.locations[k[0]]
            if loc.capacity is None or not loc.overload_cost:
                continue
            z = model.add_var(f"over_{k[0]}_{k[1]}", loc.overload_cost, 0.0, math.inf)
            row = {z: 1.0}
            for j, v in node_terms[k]:
                row[j] = row.get(j, 0.0) - v
            model.add_row(row, lb=residual_in.get(k, 0.0) - loc.capacity, name=f"load_{k[0]}_{k[1]}")
    return model, choices


def estimate_flow_vars(instance: Instance, bundles: Sequence[int]) -> int:
    """Arc variables plus at most as many bin and overload variables."""
    return sum(2 * len(instance.bundle_graph(b).arcs) for b in bundles)


def build_flow_milp(solution: Solution, bundles: Sequence[int], scaled: bool = True,
                    overload: bool = True, budget: Optional[int] = None) -> PerturbationMilp:
    """Arc-flow model over the travel-time subgraphs of ``bundles``."""
    bundles = sorted(set(bundles))
    if not bundles:
        raise ValueError("empty bundle subset")
    inst = solution.instance
    net = inst.network
    if budget is not None and estimate_flow_vars(inst, bundles) > budget:
        raise BudgetExceededError(f"{estimate_flow_vars(inst, bundles)} variables > {budget}")
    options = {}
    for b in bundles:
        g = inst.bundle_graph(b)
        options[b] = [(alpha, arc_contribution(inst, b, alpha)) for alpha in g.arcs]
    model, choices = _assemble(solution, "flow", bundles, options, scaled, overload)
    j = 0
    for b in bundles:
        g = inst.bundle_graph(b)
        first = j
        col = {}
        for alpha in g.arcs:
            col[alpha] = j
            j += 1
        out = defaultdict(dict)
        into_platform = defaultdict(dict)
        for alpha, jj in col.items():
            out[alpha.tail][jj] = out[alpha.tail].get(jj, 0.0) + 1.0
            out[alpha.head][jj] = out[alpha.head].get(jj, 0.0) - 1.0
            if alpha.arc != SHORTCUT and net.is_platform(alpha.head[0]):
                into_platform[alpha.head[0]][jj] = 1.0
        for node in sorted(g.nodes):
            rhs = 1.0 if node == g.source else (-1.0 if node == g.sink else 0.0)
            model.add_row(out[node], rhs, rhs, name=f"flow_{b}_{node[0]}_{node[1]}")
        for p in sorted(into_platform):
            model.add_row(into_platform[p], ub=1.0, name=f"elem_{b}_{p}")
        assert j - first == len(g.arcs)
    return PerturbationMilp("flow", bundles, model, choices, scaled=scaled)


def build_path_milp(solution: Solution, paths: dict[int, list[list[TTArc]]], scaled: bool = True,
                    overload: bool = True, require_current: bool = True) -> PerturbationMilp:
    """Path-choice model: one binary per candidate path, exactly one per bundle."""
    inst = solution.instance
    bundles = sorted(paths)
    if not bundles:
        raise ValueError("empty bundle subset")
    for b in bundles:
        if not paths[b]:
            raise PathEnumerationError(f"bundle {inst.bundles[b].id}: no candidate path")
        if require_current and b in solution.paths and solution.paths[b] not in paths[b]:
            raise PathEnumerationError(f"bundle {inst.bundles[b].id}: current path missing")
    options = {b: [(i, path_contribution(inst, b, p)) for i, p in enumerate(paths[b])]
               for b in bundles}
    model, choices = _assemble(solution, "path", bundles, options, scaled, overload)
    j = 0
    for b in bundles:
        n = len(paths[b])
        model.add_row({j + i: 1.0 for i in range(n)}, 1.0, 1.0, name=f"pick_{b}")
        j += n
    return PerturbationMilp("path", bundles, model, choices, {b: list(paths[b]) for b in bundles},
                            scaled=scaled)


# -- candidate paths -----------------------------------------------------------------

_KPATHS: "weakref.WeakKeyDictionary[Instance, dict]" = weakref.WeakKeyDictionary()


def k_shortest_paths(instance: Instance, bundle: int, k: int) -> list[list[TTArc]]:
    """Up to ``k`` cheapest elementary paths under liquid costs (cached)."""
    cache = _KPATHS.setdefault(instance, {})
    hit = cache.get((bundle, k))
    if hit is not None:
        return hit
    g = instance.bundle_graph(bundle)
    w = liquid_weight(instance, bundle)
    best: dict = {}
    for alpha in g.arcs:
        key = (alpha.tail, alpha.head)
        if key not in best or w(alpha) < w(best[key]):
            best[key] = alpha
    dg = nx.DiGraph()
    for (t, h), alpha in sorted(best.items()):
        dg.add_edge(t, h, weight=w(alpha), alpha=alpha)
    out = []
    tries = 0
    for nodes in nx.shortest_simple_paths(dg, g.source, g.sink, weight="weight"):
        tries += 1
        path = [dg.edges[x, y]["alpha"] for x, y in zip(nodes, nodes[1:])]
        if is_elementary(instance.network, path):
            out.append(path)
            if len(out) >= k:
                break
        if tries >= 10 * k:
            break
    cache[(bundle, k)] = out
    return out


def _through(instance: Instance, bundle: int, arcs: set[int]) -> Optional[list[TTArc]]:
    """Cheapest liquid path using one of ``arcs``."""
    g = instance.bundle_graph(bundle)
    w = liquid_weight(instance, bundle)
    best = None
    for a in sorted(arcs):
        # force a copy of arc a: search source->tail and head->sink separately
        for alpha in g.arcs:
            if alpha.arc != a:
                continue
            c1, p1 = _sp(g, w, g.source, alpha.tail)
            c2, p2 = _sp(g, w, alpha.head, g.sink)
            if p1 is None or p2 is None:
                continue
            path = p1 + [alpha] + p2
            if not is_elementary(instance.network, path):
                continue
            cost = c1 + w(alpha) + c2
            if best is None or cost < best[0] - 1e-12:
                best = (cost, path)
    return best[1] if best else None


def _sp(g, w, src, dst):
    if src == dst:
        return 0.0, []
    sub = replace(g, source=src, sink=dst)
    cost, path = dijkstra(sub, w)
    return (cost, path) if path else (math.inf, None)


def _avoiding(instance: Instance, bundle: int, arcs: set[int]) -> Optional[list[TTArc]]:
    g = instance.bundle_graph(bundle)
    w = liquid_weight(instance, bundle)
    cost, path = dijkstra(g, lambda alpha: math.inf if alpha.arc in arcs else w(alpha))
    if path and is_elementary(instance.network, path):
        return path
    return None


def candidate_paths(solution: Solution, bundle: int, k: int, through: set[int] = frozenset(),
                    avoid: set[int] = frozenset()) -> list[list[TTArc]]:
    inst = solution.instance
    paths = [list(solution.paths[bundle])] if bundle in solution.paths else []
    extra = list(k_shortest_paths(inst, bundle, k))
    if through:
        p = _through(inst, bundle, through)
        if p is not None:
            extra.append(p)
    if avoid:
        p = _avoiding(inst, bundle, avoid)
        if p is not None:
            extra.append(p)
    seen = {tuple(p) for p in paths}
    for p in extra:
        if tuple(p) not in seen:
            seen.add(tuple(p))
            paths.append(p)
    return paths


# -- subproblem selection ---------------------------------------------------------------

@dataclass
class Subproblem:
    family: str
    bundles: list[int]
    focus: set[int] = field(default_factory=set)  # physical arcs for attract/reduce


def _stack(groups: list[list[int]], instance: Instance, budget: int) -> list[int]:
    chosen: list[int] = []
    used = 0
    for g in groups:
        cost = estimate_flow_vars(instance, g)
        if chosen and used + cost > budget:
            break
        if not chosen and cost > budget:
            # a single group already too large: keep the prefix that fits
            for b in g:
                c = estimate_flow_vars(instance, [b])
                if chosen and used + c > budget:
                    break
                chosen.append(b)
                used += c
            break
        chosen.extend(g)
        used += cost
    return sorted(set(chosen))


def select_subproblem(family: str, solution: Solution, rng: np.random.Generator,
                      config: Optional[PerturbConfig] = None) -> Subproblem:
    config = config or PerturbConfig()
    inst = solution.instance
    net = inst.network
    bundles = sorted(solution.paths)
    if family in ("single_plant", "single_supplier"):
        attr = "unit" if family == "single_plant" else "supplier"
        groups: dict[int, list[int]] = defaultdict(list)
        for b in bundles:
            groups[getattr(inst.bundles[b], attr)].append(b)
        keys = sorted(groups)
        order = [keys[i] for i in rng.permutation(len(keys))]
        return Subproblem(family, _stack([groups[k] for k in order], inst, config.variable_budget))
    if family == "random":
        n = min(config.random_size, len(bundles))
        pick = [bundles[i] for i in rng.choice(len(bundles), size=n, replace=False)] if n else []
        return Subproblem(family, _stack([[b] for b in pick], inst, config.variable_budget))
    if family == "directs":
        return Subproblem(family, [b for b in bundles if solution.is_direct(b)])
    if family not in ("attract", "reduce"):
        raise ValueError(f"unknown family {family!r}")
    on: dict[int, set[int]] = defaultdict(set)
    for b in bundles:
        for alpha in solution.paths[b]:
            if alpha.arc != SHORTCUT:
                on[alpha.arc].add(b)
    if family == "attract":
        able: dict[int, set[int]] = defaultdict(set)
        for b in bundles:
            for a in {alpha.arc for alpha in inst.bundle_graph(b).arcs if alpha.arc != SHORTCUT}:
                if net.arcs[a].kind is not ArcKind.DIRECT:
                    able[a].add(b)
        pool = {a: able[a] - on[a] for a in able}
    else:
        pool = {a: set(bs) for a, bs in on.items() if net.arcs[a].kind is not ArcKind.DIRECT}
    arcs = sorted(a for a in pool if pool[a])
    if not arcs:
        return Subproblem(family, [])
    if family == "attract":
        weight = np.array([len(pool[a]) for a in arcs], dtype=float)
    else:
        # favour poorly filled arcs
        fill = defaultdict(lambda: [0.0, 0.0])
        for key, m in solution.manifests.items():
            fill[key[0]][0] += m.volume()
            fill[key[0]][1] += m.n_bins * m.capacity
        weight = np.array([1.0 - (fill[a][0] / fill[a][1] if fill[a][1] else 1.0) + 1e-3
                           for a in arcs])
    order = rng.choice(len(arcs), size=len(arcs), replace=False, p=weight / weight.sum())
    target = math.ceil(config.path_family_coverage * len(bundles))
    chosen: set[int] = set()
    focus: set[int] = set()
    for i in order:
        a = arcs[int(i)]
        focus.add(a)
        chosen |= pool[a]
        if len(chosen) >= target:
            break
    return Subproblem(family, sorted(chosen), focus)


# -- perturbation loop --------------------------------------------------------------------

def apply_paths(solution: Solution, paths: dict[int, list[TTArc]]) -> float:
    """Reroute bundles to the given paths with real bin packing."""
    before = solution.total
    inst = solution.instance
    touched = set()
    for b in sorted(paths):
        if b in solution.paths:
            touched |= solution.projected_keys(b)
            solution.unassign(b)
    rank = {b: i for i, b in enumerate(insertion_order(inst))}
    for b in sorted(paths, key=rank.__getitem__):
        solution.assign(b, paths[b])
        touched |= solution.projected_keys(b)
    repack(solution, touched)
    return solution.total - before


@dataclass
class PerturbRound:
    family: str
    bundles: int
    variables: int
    status: str  # accepted | rejected | skipped | <milp status>
    delta: float
    total: float


def solve_subproblem(solution: Solution, sub: Subproblem, config: PerturbConfig,
                     time_limit: float) -> tuple[Optional[dict], PerturbationMilp | None, MilpResult | None]:
    if not sub.bundles:
        return None, None, None
    if sub.family in FLOW_FAMILIES:
        pm = build_flow_milp(solution, sub.bundles)
    else:
        through = sub.focus if sub.family == "attract" else set()
        avoid = sub.focus if sub.family == "reduce" else set()
        paths = {b: candidate_paths(solution, b, config.k_paths, through, avoid) for b in sub.bundles}
        pm = build_path_milp(solution, paths)
        if pm.n_vars > config.variable_budget:
            return None, pm, None
    res = solve_milp(pm.model, time_limit=max(1e-3, time_limit), mip_rel_gap=config.mip_rel_gap)
    if not res.has_solution:
        return None, pm, res
    return pm.decode(res.x), pm, res


def perturb(solution: Solution, rng: np.random.Generator, config: Optional[PerturbConfig] = None,
            deadline: Optional[float] = None) -> list[PerturbRound]:
    """Alternate flow and path rounds until enough paths changed; modifies in place."""
    config = config or PerturbConfig()
    inst = solution.instance
    start_cost = solution.total
    start = {b: list(p) for b, p in solution.paths.items()}
    n = len(start)
    rounds: list[PerturbRound] = []
    changed: set[int] = set()

    def out_of_time():
        return deadline is not None and time.perf_counter() >= deadline

    def one_round(family: str) -> bool:
        """Returns False when the loop must stop."""
        sub = select_subproblem(family, solution, rng, config)
        limit = config.milp_time_limit
        if deadline is not None:
            limit = min(limit, deadline - time.perf_counter())
        if limit <= 0:
            return False
        paths, pm, res = solve_subproblem(solution, sub, config, limit)
        nv = pm.n_vars if pm is not None else 0
        if paths is None:
            status = "empty" if pm is None else (res.status if res is not None else "budget")
            rounds.append(PerturbRound(family, len(sub.bundles), nv, status, 0.0, solution.total))
            return True
        before = solution.total
        solution.checkpoint()
        apply_paths(solution, paths)
        if solution.total > before * (1 + config.cost_tolerance) + 1e-9 or \
                solution.total > start_cost * (1 + config.loop_abort) + 1e-9:
            solution.rollback()
            rounds.append(PerturbRound(family, len(sub.bundles), nv, "rejected", 0.0, solution.total))
            return solution.total <= start_cost * (1 + config.loop_abort)
        solution.commit()
        for b in paths:
            if solution.paths[b] != start[b]:
                changed.add(b)
            else:
                changed.discard(b)
        rounds.append(PerturbRound(family, len(sub.bundles), nv, "accepted",
                                   solution.total - before, solution.total))
        return True

    kinds = [config.flow_families, config.path_families]
    r = 0
    while r < config.max_rounds and len(changed) < config.path_change_threshold * n:
        if out_of_time():
            break
        fams = kinds[r % 2] or kinds[(r + 1) % 2]
        family = fams[int(rng.integers(len(fams)))]
        r += 1
        if not one_round(family):
            break
    if config.directs_last and not out_of_time():
        one_round("directs")
    return rounds


def ils(instance: Instance, config: Optional[ILSConfig] = None, seed: int = 0,
        initial: Optional[Solution] = None) -> tuple[Solution, list[TraceRecord]]:
    """Construct, descend, then alternate perturbation and descent; returns the best."""
    config = config or ILSConfig()
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    deadline = t0 + config.time_limit

    def ls_config():
        left = max(0.0, deadline - time.perf_counter())
        return replace(config.local_search, time_limit=min(config.local_search.time_limit, left))

    sol = initial.copy() if initial is not None else constructive(instance)
    trace = [TraceRecord("construct", "constructive", 0.0, sol.total, time.perf_counter() - t0)]
    trace += local_search(sol, ls_config(), rng, phase="ls0", clock_start=t0)
    best = sol
    for r in range(config.rounds):
        if time.perf_counter() >= deadline:
            break
        cur = best.copy()
        for pr in perturb(cur, rng, config.perturb, deadline):
            trace.append(TraceRecord(f"perturb{r + 1}", f"{pr.family}:{pr.status}", pr.delta,
                                     pr.total, time.perf_counter() - t0))
        trace += local_search(cur, ls_config(), rng, phase=f"ls{r + 1}", clock_start=t0)
        if cur.total < best.total - 1e-9:
            best = cur
            trace.append(TraceRecord(f"round{r + 1}", "new_best", 0.0, best.total,
                                     time.perf_counter() - t0))
    return best, trace

"""Synthetic hub-and-spoke instances.

Continents are clusters of points.  Suppliers hang off one or two nearby
platforms, platforms form a dense core inside each continent plus a few
long-haul links between continents, and every bundle also gets a direct
supplier-to-plant arc.  Part volumes mostly fall in the 1-4 m3 band with a
heavy tail; weekly quantities are stable with small noise.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .model import Arc, ArcKind, Commodity, Instance, Location, LocationKind, Network, haversine_km

CONTINENT_CENTERS = [(48.0, 8.0), (38.0, 115.0), (-18.0, -50.0), (40.0, -90.0)]

TRUCK_CAPACITY = 80.0
CONTAINER_CAPACITY = 65.0


@dataclass(frozen=True)
class GeneratorParams:
    name: str = "synthetic"
    continents: int = 1
    suppliers: int = 10
    platforms_per_continent: int = 3
    units_per_continent: int = 3
    bundles: int = 20
    horizon: int = 4
    order_probability: float = 0.85  # chance a bundle ships in a given week
    parts_per_bundle: tuple[int, int] = (1, 3)
    quantity: tuple[int, int] = (1, 6)
    delivery_slack: tuple[int, int] = (0, 2)
    foreign_share: float = 0.2  # bundles whose plant is on another continent
    outsourced_share: float = 0.1
    spread_deg: float = 6.0
    platform_capacity_factor: float = 0.8
    volume_scale: float = 1.0
    capacity_scale: float = 1.0
    long_haul_time: tuple[int, int] = (3, 8)
    max_travel_time: int = 3  # cap on truck legs inside a continent


PRESETS: dict[str, GeneratorParams] = {
    # brute-force scale: a handful of bundles, two platforms, short horizon
    "tiny": GeneratorParams(name="tiny", suppliers=2, platforms_per_continent=2,
                            units_per_continent=2, bundles=4, horizon=2,
                            parts_per_bundle=(1, 2), quantity=(1, 2), delivery_slack=(0, 0),
                            order_probability=0.6, outsourced_share=0.0, spread_deg=3.0,
                            max_travel_time=1, volume_scale=3.0, capacity_scale=0.25),
    "XS": GeneratorParams(name="XS", suppliers=12, platforms_per_continent=3,
                          units_per_continent=3, bundles=24, horizon=4, spread_deg=5.0),
    "S": GeneratorParams(name="S", continents=2, suppliers=40, platforms_per_continent=3,
                         units_per_continent=3, bundles=100, horizon=10),
    "M": GeneratorParams(name="M", continents=3, suppliers=160, platforms_per_continent=4,
                         units_per_continent=3, bundles=500, horizon=10),
    # many small flows: liquid bounds pick platform routes that pack badly
    "frag": GeneratorParams(name="frag", continents=1, suppliers=60, platforms_per_continent=4,
                            units_per_continent=3, bundles=120, horizon=4,
                            quantity=(1, 2), parts_per_bundle=(1, 2), volume_scale=0.6,
                            order_probability=0.5, foreign_share=0.0),
}


def preset(name: str, **overrides) -> GeneratorParams:
    try:
        p = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(p, **overrides) if overrides else p


def _r(x: float, nd: int = 3) -> float:
    return float(round(x, nd))


def _truck_time(d: float, cap: int) -> int:
    return int(min(cap, d // 900))


def generate(params: GeneratorParams, seed: int) -> Instance:
    rng = np.random.default_rng(seed)
    P = params
    locs: list[Location] = []
    cont_of: dict[str, int] = {}
    pos: dict[str, tuple[float, float]] = {}

    def point(c):
        lat0, lon0 = CONTINENT_CENTERS[c % len(CONTINENT_CENTERS)]
        return (_r(lat0 + rng.normal(0, P.spread_deg / 2), 4),
                _r(lon0 + rng.normal(0, P.spread_deg), 4))

    platforms, units, suppliers = [], [], []
    for c in range(P.continents):
        for k in range(P.platforms_per_continent):
            pid = f"P{c}{k:02d}"
            platforms.append(pid)
            cont_of[pid] = c
            pos[pid] = point(c)
        for k in range(P.units_per_continent):
            uid = f"U{c}{k:02d}"
            units.append(uid)
            cont_of[uid] = c
            pos[uid] = point(c)
    weights = np.array([0.7] + [0.3 / max(1, P.continents - 1)] * (P.continents - 1))
    weights = weights[:P.continents] / weights[:P.continents].sum()
    for k in range(P.suppliers):
        sid = f"S{k:04d}"
        c = int(rng.choice(P.continents, p=weights))
        suppliers.append(sid)
        cont_of[sid] = c
        pos[sid] = point(c)

    def dist(a, b):
        return max(1.0, _r(haversine_km(*pos[a], *pos[b]), 1))

    arcs: list[Arc] = []

    def truck(aid, tail, head, kind, outsourced=False):
        d = dist(tail, head)
        cap = _r(TRUCK_CAPACITY * P.capacity_scale, 2)
        cost = _r(150 + 1.1 * d, 2)
        arcs.append(Arc(
            id=aid, tail=tail, head=head, kind=kind, travel_time=_truck_time(d, P.max_travel_time),
            distance=d, capacity=cap, bin_cost=0.0 if outsourced else cost,
            carbon_cost=_r(0.12 * d, 3), outsourced=outsourced,
            outsource_cost=_r(1.8 * cost, 2) if outsourced else None))

    def long_haul(aid, tail, head, kind):
        d = dist(tail, head)
        lo, hi = P.long_haul_time
        arcs.append(Arc(
            id=aid, tail=tail, head=head, kind=kind, travel_time=int(rng.integers(lo, hi + 1)),
            distance=d, capacity=_r(CONTAINER_CAPACITY * P.capacity_scale, 2),
            bin_cost=_r(2500 + 0.25 * d, 2), carbon_cost=_r(0.03 * d, 3)))

    # collection: 1-2 nearest platforms on the supplier's continent
    for s in suppliers:
        near = sorted((p for p in platforms if cont_of[p] == cont_of[s]), key=lambda p: dist(s, p))
        for p in near[:int(rng.integers(1, 3))]:
            truck(f"C-{s}-{p}", s, p, ArcKind.COLLECTION,
                  outsourced=bool(rng.random() < P.outsourced_share))
    # platform core
    for p in platforms:
        for q in platforms:
            if p != q and cont_of[p] == cont_of[q]:
                d = dist(p, q)
                arcs.append(Arc(
                    id=f"I-{p}-{q}", tail=p, head=q, kind=ArcKind.INTER_PLATFORM,
                    travel_time=max(1, _truck_time(d, P.max_travel_time)), distance=d,
                    capacity=_r(TRUCK_CAPACITY * P.capacity_scale, 2),
                    bin_cost=_r(150 + 1.0 * d, 2), carbon_cost=_r(0.12 * d, 3)))
    if P.continents > 1:
        for p in platforms:
            others = [q for q in platforms if cont_of[q] != cont_of[p]]
            for q in sorted(rng.choice(others, size=min(2, len(others)), replace=False)):
                if not any(a.id == f"I-{p}-{q}" for a in arcs):
                    long_haul(f"I-{p}-{q}", p, str(q), ArcKind.INTER_PLATFORM)
                if not any(a.id == f"I-{q}-{p}" for a in arcs):
                    long_haul(f"I-{q}-{p}", str(q), p, ArcKind.INTER_PLATFORM)
    for p in platforms:
        for u in units:
            if cont_of[p] == cont_of[u]:
                truck(f"D-{p}-{u}", p, u, ArcKind.DELIVERY)

    # bundles: distinct supplier/plant pairs
    pairs: list[tuple[str, str]] = []
    seen = set()
    target = min(P.bundles, len(suppliers) * len(units))
    while len(pairs) < target:
        s = suppliers[int(rng.integers(len(suppliers)))]
        local = [u for u in units if cont_of[u] == cont_of[s]]
        foreign = [u for u in units if cont_of[u] != cont_of[s]]
        pool = foreign if (foreign and rng.random() < P.foreign_share) else (local or units)
        u = pool[int(rng.integers(len(pool)))]
        if (s, u) not in seen:
            seen.add((s, u))
            pairs.append((s, u))
    pairs.sort()
    for s, u in pairs:
        if cont_of[s] == cont_of[u]:
            truck(f"X-{s}-{u}", s, u, ArcKind.DIRECT)
        else:
            long_haul(f"X-{s}-{u}", s, u, ArcKind.DIRECT)

    network = Network([_location(l, k, pos[l]) for k, ls in (
        (LocationKind.SUPPLIER, suppliers), (LocationKind.UNIT, units)) for l in ls]
        + [_location(p, LocationKind.PLATFORM, pos[p]) for p in platforms], arcs)
    fastest = _fastest_times(network)
    min_cap = min(a.capacity for a in arcs)

    commodities: list[Commodity] = []
    weekly_in: dict[str, float] = {p: 0.0 for p in platforms}
    for b, (s, u) in enumerate(pairs):
        tau = fastest[(s, u)] + int(rng.integers(P.delivery_slack[0], P.delivery_slack[1] + 1))
        tau = max(1, min(tau, P.horizon - 1 if P.horizon > 1 else 1))
        tau = max(tau, fastest[(s, u)])
        n_parts = int(rng.integers(P.parts_per_bundle[0], P.parts_per_bundle[1] + 1))
        cap_rate = _r(rng.uniform(0.0005, 0.002), 6)
        first = True
        for k in range(n_parts):
            vol = _part_volume(rng, P.volume_scale, min_cap)
            base_q = int(rng.integers(P.quantity[0], P.quantity[1] + 1))
            for week in range(1, P.horizon + 1):
                if not first and rng.random() > P.order_probability:
                    continue
                first = False
                q = max(1, base_q + int(rng.integers(-1, 2)) if base_q > 2 else base_q)
                commodities.append(Commodity(
                    id=f"m{b:04d}-{k}-{week:02d}", part=f"part{b:04d}-{k}", supplier=s,
                    unit=u, delivery_week=week, volume=vol, max_delivery_time=tau,
                    quantity=q, capital_rate=cap_rate))
                near = [a for a in arcs if a.tail == s and a.kind is ArcKind.COLLECTION]
                for a in near:
                    weekly_in[a.head] += q * vol / (len(near) * P.horizon)

    # platform capacity: a fraction of the inbound volume if every supplier used its hubs
    total_in = sum(weekly_in.values())
    locations = []
    for l in network.locations:
        if l.kind is LocationKind.PLATFORM:
            cap = P.platform_capacity_factor * max(weekly_in[l.id], total_in / len(platforms) / 2)
            l = replace(l, capacity=_r(max(cap, 10.0), 2))
        locations.append(l)
    network = Network(locations, arcs)
    return Instance(f"{P.name}-{seed}", P.horizon, network, commodities, seed=seed)


def _location(lid: str, kind: LocationKind, p) -> Location:
    if kind is LocationKind.PLATFORM:
        return Location(lid, kind, p[0], p[1], capacity=0.0, unit_cost=40.0, overload_cost=6.0)
    return Location(lid, kind, p[0], p[1])


def _part_volume(rng, scale: float, cap: float) -> float:
    if rng.random() < 0.75:
        v = rng.uniform(1.0, 4.0)
    else:
        v = rng.lognormal(math.log(2.5), 1.0)
    return _r(min(max(0.05, v * scale), 0.5 * cap), 3)


def _fastest_times(network: Network) -> dict[tuple[str, str], int]:
    """Minimum travel time between every supplier and plant (Dijkstra on weeks)."""
    out = {}
    from .model import LocationKind as K
    for s, loc in enumerate(network.locations):
        if loc.kind is not K.SUPPLIER:
            continue
        best = {s: 0}
        heap = [(0, s)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > best.get(v, math.inf):
                continue
            for i in network.out_arcs[v]:
                h = network.arc_head[i]
                if network.kind[h] is K.SUPPLIER:
                    continue
                nd = d + network.arcs[i].travel_time
                if nd < best.get(h, math.inf):
                    best[h] = nd
                    if network.kind[h] is not K.UNIT:
                        heapq.heappush(heap, (nd, h))
        for u, t in best.items():
            if network.kind[u] is K.UNIT:
                out[(loc.id, network.locations[u].id)] = t
    return out

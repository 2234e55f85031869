"""Domain types: static network, demand hierarchy and the two time expansions.

Time conventions
----------------
Weeks on the rolling horizon are 1-based and wrap with ``((x - 1) % T) + 1``.

Travel-time graph nodes are ``(location, step)`` with ``step`` in ``1..steps``;
production units only exist at ``step == steps``.  A node at step ``t`` has
``steps - t`` weeks left before delivery, so for an order delivered in week
``d`` the node projects to week ``d - (steps - t)`` on the time-space graph.
Bundle paths start at ``(supplier, steps - max_delivery_time)`` and end at
``(unit, steps)``.  Shortcut arcs ``(s, t) -> (s, t + 1)`` hold goods one week
at the supplier before dispatch.
"""
from __future__ import annotations

import enum
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

SHORTCUT = -1


class ModelError(ValueError):
    """Raised for malformed networks or demand."""


class HorizonTooShortError(ModelError):
    pass


class InfeasibleBundleError(ModelError):
    def __init__(self, bundle_id: str, message: str = "no source-to-sink path"):
        super().__init__(f"bundle {bundle_id}: {message}")
        self.bundle_id = bundle_id


class LocationKind(str, enum.Enum):
    SUPPLIER = "supplier"
    PLATFORM = "platform"
    UNIT = "unit"


class ArcKind(str, enum.Enum):
    COLLECTION = "collection"
    INTER_PLATFORM = "inter_platform"
    DELIVERY = "delivery"
    DIRECT = "direct"


ARC_ENDPOINTS = {
    ArcKind.COLLECTION: (LocationKind.SUPPLIER, LocationKind.PLATFORM),
    ArcKind.INTER_PLATFORM: (LocationKind.PLATFORM, LocationKind.PLATFORM),
    ArcKind.DELIVERY: (LocationKind.PLATFORM, LocationKind.UNIT),
    ArcKind.DIRECT: (LocationKind.SUPPLIER, LocationKind.UNIT),
}


def wrap_week(x: int, horizon: int) -> int:
    return ((x - 1) % horizon) + 1


@dataclass(frozen=True)
class Location:
    id: str
    kind: LocationKind
    lat: float = 0.0
    lon: float = 0.0
    capacity: Optional[float] = None  # platform inbound volume per week (m3)
    unit_cost: Optional[float] = None  # per full-bin equivalent handled
    overload_cost: Optional[float] = None  # per m3 above capacity

    @property
    def is_platform(self) -> bool:
        return self.kind is LocationKind.PLATFORM


@dataclass(frozen=True)
class Arc:
    id: str
    tail: str
    head: str
    kind: ArcKind
    travel_time: int
    distance: float
    capacity: float  # bin capacity L_a (m3)
    bin_cost: float
    carbon_cost: float = 0.0
    outsourced: bool = False
    outsource_cost: Optional[float] = None
    max_bins: Optional[int] = None

    @property
    def consolidated(self) -> bool:
        return not self.outsourced


@dataclass(frozen=True)
class Commodity:
    id: str
    part: str
    supplier: str
    unit: str
    delivery_week: int
    volume: float
    max_delivery_time: int
    quantity: int = 1
    capital_rate: float = 0.0


@dataclass
class Order:
    index: int
    bundle: int
    week: int
    commodities: list[int]
    max_delivery_time: int
    volume: float
    capital: float  # sum of quantity * capital_rate, multiplied by arc distance
    items: list[tuple[int, float, int]]  # (commodity index, volume, count), FFD order
    units: list[float] = field(default_factory=list)  # expanded unit volumes, decreasing


@dataclass
class Bundle:
    index: int
    id: str
    supplier: int
    unit: int
    orders: list[int]
    max_delivery_time: int
    max_item_volume: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.supplier, self.unit)


class Network:
    """Static digraph of suppliers, platforms and production units."""

    def __init__(self, locations: Sequence[Location], arcs: Sequence[Arc]):
        self.locations = sorted(locations, key=lambda l: l.id)
        self.arcs = sorted(arcs, key=lambda a: a.id)
        self.loc_index = {l.id: i for i, l in enumerate(self.locations)}
        self.arc_index = {a.id: i for i, a in enumerate(self.arcs)}
        if len(self.loc_index) != len(self.locations):
            raise ModelError("duplicate location id")
        if len(self.arc_index) != len(self.arcs):
            raise ModelError("duplicate arc id")
        for a in self.arcs:
            if a.tail not in self.loc_index or a.head not in self.loc_index:
                raise ModelError(f"arc {a.id} references a missing location")
        self.arc_tail = [self.loc_index[a.tail] for a in self.arcs]
        self.arc_head = [self.loc_index[a.head] for a in self.arcs]
        self.out_arcs: list[list[int]] = [[] for _ in self.locations]
        self.in_arcs: list[list[int]] = [[] for _ in self.locations]
        for i in range(len(self.arcs)):
            self.out_arcs[self.arc_tail[i]].append(i)
            self.in_arcs[self.arc_head[i]].append(i)
        self.kind = [l.kind for l in self.locations]
        self.platforms = [i for i, l in enumerate(self.locations) if l.is_platform]
        # per-unit-volume arc rate: (carbon + platform handling + outsourcing) / L_a
        self.volume_rate = []
        for i, a in enumerate(self.arcs):
            head = self.locations[self.arc_head[i]]
            rate = a.carbon_cost
            if head.is_platform:
                rate += head.unit_cost or 0.0
            if a.outsourced:
                rate += a.outsource_cost or 0.0
            self.volume_rate.append(rate / a.capacity)

    def is_platform(self, loc: int) -> bool:
        return self.kind[loc] is LocationKind.PLATFORM


class TimedArc(NamedTuple):
    arc: int
    tail_week: int
    head_week: int


@dataclass
class TimeSpaceGraph:
    horizon: int
    nodes: list[tuple[int, int]]
    arcs: list[TimedArc]
    consolidated: list[TimedArc]
    outsourced: list[TimedArc]


def build_time_space_graph(network: Network, horizon: int) -> TimeSpaceGraph:
    if horizon < 1:
        raise HorizonTooShortError("horizon must be at least one week")
    for a in network.arcs:
        if a.travel_time >= horizon:
            raise HorizonTooShortError(
                f"arc {a.id} travel time {a.travel_time} >= horizon {horizon}")
    nodes = [(v, t) for v in range(len(network.locations)) for t in range(1, horizon + 1)]
    arcs, con, out = [], [], []
    for i, a in enumerate(network.arcs):
        for t in range(1, horizon + 1):
            ta = TimedArc(i, t, wrap_week(t + a.travel_time, horizon))
            arcs.append(ta)
            (out if a.outsourced else con).append(ta)
    return TimeSpaceGraph(horizon, nodes, arcs, con, out)


class TTArc(NamedTuple):
    """Arc of the travel-time graph; ``arc == SHORTCUT`` for dispatch delays."""
    arc: int
    tail: tuple[int, int]
    head: tuple[int, int]


@dataclass
class TravelTimeGraph:
    steps: int
    nodes: list[tuple[int, int]]
    arcs: list[TTArc]

    def out_adjacency(self) -> dict[tuple[int, int], list[TTArc]]:
        adj: dict[tuple[int, int], list[TTArc]] = defaultdict(list)
        for a in self.arcs:
            adj[a.tail].append(a)
        return adj


def _timed_copies(network: Network, arc: int, steps: int, allowed=None):
    a = network.arcs[arc]
    tail, head = network.arc_tail[arc], network.arc_head[arc]
    head_is_unit = network.kind[head] is LocationKind.UNIT
    for t in range(1, steps + 1):
        th = t + a.travel_time
        if th > steps or (head_is_unit and th != steps):
            continue
        yield TTArc(arc, (tail, t), (head, th))


def build_travel_time_graph(network: Network, steps: int) -> TravelTimeGraph:
    if steps < 1:
        raise ModelError("travel-time horizon must be at least one step")
    nodes = []
    for v, kind in enumerate(network.kind):
        if kind is LocationKind.UNIT:
            nodes.append((v, steps))
        else:
            nodes.extend((v, t) for t in range(1, steps + 1))
    arcs: list[TTArc] = []
    for v, kind in enumerate(network.kind):
        if kind is LocationKind.SUPPLIER:
            arcs.extend(TTArc(SHORTCUT, (v, t), (v, t + 1)) for t in range(1, steps))
    for i in range(len(network.arcs)):
        arcs.extend(_timed_copies(network, i, steps))
    return TravelTimeGraph(steps, nodes, arcs)


@dataclass
class BundleGraph:
    """Pruned travel-time subgraph of one bundle."""
    bundle: int
    source: tuple[int, int]
    sink: tuple[int, int]
    arcs: list[TTArc]
    out: dict[tuple[int, int], list[TTArc]] = field(repr=False)
    inc: dict[tuple[int, int], list[TTArc]] = field(repr=False)
    platforms: list[int] = field(repr=False)

    @property
    def nodes(self) -> set[tuple[int, int]]:
        nodes = {self.source, self.sink}
        for a in self.arcs:
            nodes.add(a.tail)
            nodes.add(a.head)
        return nodes


def topological_order(nodes: Iterable, arcs: Iterable[TTArc]) -> list:
    """Kahn's algorithm; raises ModelError on a cycle."""
    nodes = list(nodes)
    indeg = {n: 0 for n in nodes}
    out = defaultdict(list)
    for a in arcs:
        indeg[a.head] += 1
        out[a.tail].append(a.head)
    queue = deque(sorted(n for n in nodes if indeg[n] == 0))
    order = []
    while queue:
        n = queue.popleft()
        order.append(n)
        for h in out[n]:
            indeg[h] -= 1
            if indeg[h] == 0:
                queue.append(h)
    if len(order) != len(nodes):
        raise ModelError("travel-time graph has a cycle")
    return order


class Instance:
    """Network plus demand, with derived orders, bundles and bundle subgraphs."""

    def __init__(self, name: str, horizon: int, network: Network,
                 commodities: Sequence[Commodity], seed: Optional[int] = None):
        self.name = name
        self.horizon = horizon
        self.seed = seed
        self.network = network
        self.commodities = sorted(commodities, key=lambda c: c.id)
        self.commodity_index = {c.id: i for i, c in enumerate(self.commodities)}
        if len(self.commodity_index) != len(self.commodities):
            raise ModelError("duplicate commodity id")
        for a in network.arcs:
            if a.travel_time >= horizon:
                raise HorizonTooShortError(
                    f"arc {a.id} travel time {a.travel_time} >= horizon {horizon}")
        self._build_demand()
        self.steps = 1 + max((b.max_delivery_time for b in self.bundles), default=0)
        self._graphs: dict[int, BundleGraph] = {}

    def _build_demand(self) -> None:
        net = self.network
        groups: dict[tuple[int, int, int], list[int]] = defaultdict(list)
        for i, c in enumerate(self.commodities):
            key = (net.loc_index[c.supplier], net.loc_index[c.unit], c.delivery_week)
            groups[key].append(i)
        by_pair: dict[tuple[int, int], list[tuple[int, list[int]]]] = defaultdict(list)
        for (s, u, d), members in groups.items():
            by_pair[(s, u)].append((d, members))
        self.orders: list[Order] = []
        self.bundles: list[Bundle] = []
        pairs = sorted(by_pair, key=lambda p: (net.locations[p[0]].id, net.locations[p[1]].id))
        for b_idx, (s, u) in enumerate(pairs):
            order_ids = []
            for d, members in sorted(by_pair[(s, u)]):
                cs = [self.commodities[m] for m in members]
                items = sorted(((m, self.commodities[m].volume, self.commodities[m].quantity)
                                for m in members), key=lambda it: (-it[1], it[0]))
                o = Order(
                    index=len(self.orders), bundle=b_idx, week=d, commodities=members,
                    max_delivery_time=min(c.max_delivery_time for c in cs),
                    volume=sum(c.quantity * c.volume for c in cs),
                    capital=sum(c.quantity * c.capital_rate for c in cs),
                    items=items,
                    units=[v for _, v, n in items for _ in range(n)],
                )
                self.orders.append(o)
                order_ids.append(o.index)
            os_ = [self.orders[i] for i in order_ids]
            self.bundles.append(Bundle(
                index=b_idx,
                id=f"{net.locations[s].id}->{net.locations[u].id}",
                supplier=s, unit=u, orders=order_ids,
                max_delivery_time=max(o.max_delivery_time for o in os_),
                max_item_volume=max(self.commodities[m].volume
                                    for o in os_ for m in o.commodities),
            ))
        self.bundle_index = {b.id: b.index for b in self.bundles}
        self.commodity_order = [0] * len(self.commodities)
        for o in self.orders:
            for m in o.commodities:
                self.commodity_order[m] = o.index

    # -- projection ---------------------------------------------------------
    def project_node(self, node: tuple[int, int], order: Order) -> tuple[int, int]:
        v, t = node
        return (v, wrap_week(order.week - (self.steps - t), self.horizon))

    def project(self, alpha: TTArc, order: Order) -> Optional[TimedArc]:
        if alpha.arc == SHORTCUT:
            return None
        tail_week = wrap_week(order.week - (self.steps - alpha.tail[1]), self.horizon)
        tau = self.network.arcs[alpha.arc].travel_time
        return TimedArc(alpha.arc, tail_week, wrap_week(tail_week + tau, self.horizon))

    # -- bundle subgraphs ----------------------------------------------------
    def bundle_graph(self, b: int) -> BundleGraph:
        g = self._graphs.get(b)
        if g is None:
            g = bundle_subgraph(self, self.bundles[b])
            self._graphs[b] = g
        return g

    def travel_time_graph(self) -> TravelTimeGraph:
        return build_travel_time_graph(self.network, self.steps)

    def time_space_graph(self) -> TimeSpaceGraph:
        return build_time_space_graph(self.network, self.horizon)


def bundle_subgraph(instance: Instance, bundle: Bundle) -> BundleGraph:
    net = instance.network
    steps = instance.steps
    s, u = bundle.supplier, bundle.unit
    source = (s, steps - bundle.max_delivery_time)
    sink = (u, steps)
    if source[1] < 1:
        raise InfeasibleBundleError(bundle.id, "delivery time exceeds travel-time horizon")
    allowed_tail = set(net.platforms) | {s}
    allowed_head = set(net.platforms) | {u}
    arcs = [TTArc(SHORTCUT, (s, t), (s, t + 1)) for t in range(source[1], steps)]
    for v in allowed_tail:
        for i in net.out_arcs[v]:
            if net.arc_head[i] in allowed_head:
                arcs.extend(a for a in _timed_copies(net, i, steps)
                            if v != s or a.tail[1] >= source[1])
    out = defaultdict(list)
    inc = defaultdict(list)
    for a in arcs:
        out[a.tail].append(a)
        inc[a.head].append(a)
    fwd = _reach(source, out, lambda a: a.head)
    if sink not in fwd:
        raise InfeasibleBundleError(bundle.id)
    bwd = _reach(sink, inc, lambda a: a.tail)
    keep = fwd & bwd
    arcs = [a for a in arcs if a.tail in keep and a.head in keep]
    arcs.sort(key=lambda a: (a.tail[1], a.tail[0], a.arc, a.head[1]))
    out = defaultdict(list)
    inc = defaultdict(list)
    for a in arcs:
        out[a.tail].append(a)
        inc[a.head].append(a)
    platforms = sorted({v for v, _ in keep if net.is_platform(v)})
    return BundleGraph(bundle.index, source, sink, arcs, dict(out), dict(inc), platforms)


def _reach(start, adj, step) -> set:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for a in adj.get(n, ()):
            h = step(a)
            if h not in seen:
                seen.add(h)
                stack.append(h)
    return seen


def path_platforms(network: Network, path: Sequence[TTArc]) -> list[int]:
    return [a.head[0] for a in path if a.arc != SHORTCUT and network.is_platform(a.head[0])]


def is_elementary(network: Network, path: Sequence[TTArc]) -> bool:
    visited = path_platforms(network, path)
    return len(visited) == len(set(visited))


def path_nodes(path: Sequence[TTArc]) -> list[tuple[int, int]]:
    if not path:
        return []
    return [path[0].tail] + [a.head for a in path]


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    r = 6371.0
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * r * math.asin(math.sqrt(h))

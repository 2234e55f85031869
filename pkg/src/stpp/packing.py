"""One-dimensional bin packing: FFD/BFD engines, incremental insertion, bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

EPS = 1e-9

Item = tuple[Hashable, float, int]  # (id, unit volume, count)


class PackingError(ValueError):
    pass


class ItemOversizeError(PackingError):
    pass


class CapacityExhaustedError(PackingError):
    pass


@dataclass
class Bin:
    load: float = 0.0
    contents: dict = field(default_factory=dict)

    def add(self, key, volume: float, units: int = 1) -> None:
        self.contents[key] = self.contents.get(key, 0) + units
        self.load += volume * units


class Manifest:
    """Bins of one timed arc; each bin maps item id to number of units."""

    __slots__ = ("capacity", "max_bins", "bins")

    def __init__(self, capacity: float, bins: Optional[list[Bin]] = None,
                 max_bins: Optional[int] = None):
        self.capacity = capacity
        self.max_bins = max_bins
        self.bins = bins if bins is not None else []

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    def copy(self) -> "Manifest":
        return Manifest(self.capacity, [Bin(b.load, dict(b.contents)) for b in self.bins],
                        self.max_bins)

    def units(self) -> dict:
        total: dict = {}
        for b in self.bins:
            for k, n in b.contents.items():
                total[k] = total.get(k, 0) + n
        return total

    def items(self, volumes) -> list[Item]:
        """Aggregate contents back to packing items; ``volumes`` maps id -> volume."""
        return [(k, volumes[k], n) for k, n in sorted(self.units().items())]

    def volume(self) -> float:
        return sum(b.load for b in self.bins)

    def violations(self, volumes) -> list[str]:
        out = []
        for i, b in enumerate(self.bins):
            load = sum(volumes[k] * n for k, n in b.contents.items())
            if abs(load - b.load) > 1e-6 * max(1.0, self.capacity):
                out.append(f"bin {i}: stored load {b.load} != contents {load}")
            if load > self.capacity * (1 + EPS) + EPS:
                out.append(f"bin {i}: load {load} exceeds capacity {self.capacity}")
            if not b.contents:
                out.append(f"bin {i}: empty")
            if any(n <= 0 for n in b.contents.values()):
                out.append(f"bin {i}: non-positive unit count")
        if self.max_bins is not None and len(self.bins) > self.max_bins:
            out.append(f"{len(self.bins)} bins exceed limit {self.max_bins}")
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Manifest):
            return NotImplemented
        return (self.capacity == other.capacity
                and [(b.load, b.contents) for b in self.bins]
                == [(b.load, b.contents) for b in other.bins])

    def __repr__(self) -> str:
        return f"Manifest(capacity={self.capacity}, bins={[b.contents for b in self.bins]})"


def expand(items: Iterable[Item], capacity: float) -> list[tuple[Hashable, float]]:
    """Unit list sorted by decreasing volume, ties by ascending id."""
    units = []
    for key, vol, count in sorted(items, key=lambda it: (-it[1], it[0])):
        if vol > capacity * (1 + EPS):
            raise ItemOversizeError(f"item {key!r} volume {vol} exceeds capacity {capacity}")
        units.extend([(key, vol)] * count)
    return units


def _fits(load: float, vol: float, capacity: float) -> bool:
    return load + vol <= capacity + EPS * max(1.0, capacity)


def ffd_pack(items: Iterable[Item], capacity: float,
             max_bins: Optional[int] = None) -> Manifest:
    bins: list[Bin] = []
    for key, vol in expand(items, capacity):
        for b in bins:
            if _fits(b.load, vol, capacity):
                b.add(key, vol)
                break
        else:
            b = Bin()
            b.add(key, vol)
            bins.append(b)
    if max_bins is not None and len(bins) > max_bins:
        raise CapacityExhaustedError(f"{len(bins)} bins needed, {max_bins} available")
    return Manifest(capacity, bins, max_bins)


def bfd_pack(items: Iterable[Item], capacity: float,
             max_bins: Optional[int] = None) -> Manifest:
    bins: list[Bin] = []
    for key, vol in expand(items, capacity):
        best, best_left = None, math.inf
        for i, b in enumerate(bins):
            if _fits(b.load, vol, capacity):
                left = capacity - b.load - vol
                if left < best_left - EPS:
                    best, best_left = i, left
        if best is None:
            b = Bin()
            b.add(key, vol)
            bins.append(b)
        else:
            bins[best].add(key, vol)
    if max_bins is not None and len(bins) > max_bins:
        raise CapacityExhaustedError(f"{len(bins)} bins needed, {max_bins} available")
    return Manifest(capacity, bins, max_bins)


def best_pack(items: Sequence[Item], capacity: float,
              max_bins: Optional[int] = None) -> Manifest:
    """Fewest bins among FFD and BFD (FFD on ties)."""
    a = ffd_pack(items, capacity)
    b = bfd_pack(items, capacity)
    m = b if b.n_bins < a.n_bins else a
    m.max_bins = max_bins
    if max_bins is not None and m.n_bins > max_bins:
        raise CapacityExhaustedError(f"{m.n_bins} bins needed, {max_bins} available")
    return m


@dataclass
class Placement:
    """Tentative assignment of units to existing (index < n) or new bins."""
    n_existing: int
    new_bins: int
    assignments: list[tuple[int, Hashable, float]]


def tentative_insert(manifest: Optional[Manifest], items: Sequence[Item],
                     capacity: Optional[float] = None,
                     max_bins: Optional[int] = None) -> Placement:
    """First-fit of FFD-ordered units into residual space, then into new bins.

    The manifest is not modified; pass the result to :func:`commit`.
    """
    if manifest is not None:
        capacity = manifest.capacity
        max_bins = manifest.max_bins
        loads = [b.load for b in manifest.bins]
    else:
        loads = []
    n0 = len(loads)
    assignments = []
    for key, vol in expand(items, capacity):
        for i, load in enumerate(loads):
            if _fits(load, vol, capacity):
                loads[i] = load + vol
                break
        else:
            i = len(loads)
            loads.append(vol)
        assignments.append((i, key, vol))
    if max_bins is not None and len(loads) > max_bins:
        raise CapacityExhaustedError(f"{len(loads)} bins needed, {max_bins} available")
    return Placement(n0, len(loads) - n0, assignments)


def count_new_bins(loads: Sequence[float], units: Sequence[float], capacity: float) -> int:
    """Number of bins first-fit opens for ``units`` (sorted) given existing ``loads``."""
    if not units:
        return 0
    loads = list(loads)
    n0 = len(loads)
    slack = EPS * max(1.0, capacity)
    cap = capacity + slack
    for vol in units:
        for i in range(len(loads)):
            if loads[i] + vol <= cap:
                loads[i] += vol
                break
        else:
            loads.append(vol)
    return len(loads) - n0


def commit(manifest: Manifest, placement: Placement) -> None:
    if placement.n_existing != len(manifest.bins):
        raise PackingError("placement computed against a different manifest")
    for i, key, vol in placement.assignments:
        while i >= len(manifest.bins):
            manifest.bins.append(Bin())
        manifest.bins[i].add(key, vol)


def bp_lower_bound(items: Iterable[Item], capacity: float) -> int:
    total = sum(vol * count for _, vol, count in items)
    if total <= 0:
        return 0
    return max(1, math.ceil(total / capacity - 1e-9))


def exact_pack(items: Iterable[Item], capacity: float, max_items: int = 14) -> int:
    """Optimal bin count by depth-first branch and bound (verification oracle)."""
    units = [vol for _, vol in expand(items, capacity)]
    n = len(units)
    if n > max_items:
        raise PackingError(f"{n} items exceed exact_pack limit {max_items}")
    if n == 0:
        return 0
    best = ffd_pack([(i, v, 1) for i, v in enumerate(units)], capacity).n_bins
    lb = bp_lower_bound([(0, v, 1) for v in units], capacity)
    if best == lb:
        return best
    slack = EPS * max(1.0, capacity)
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + units[i]
    loads: list[float] = []

    def dfs(i: int) -> None:
        nonlocal best
        if i == n:
            best = min(best, len(loads))
            return
        free = sum(capacity - l for l in loads)
        need = len(loads) + max(0, math.ceil((suffix[i] - free) / capacity - 1e-9))
        if need >= best:
            return
        vol = units[i]
        tried = set()
        for j in range(len(loads)):
            l = loads[j]
            if l + vol <= capacity + slack and round(l, 9) not in tried:
                tried.add(round(l, 9))
                loads[j] = l + vol
                dfs(i + 1)
                loads[j] = l
                if best == lb:
                    return
        if len(loads) + 1 < best:
            loads.append(vol)
            dfs(i + 1)
            loads.pop()

    dfs(0)
    return best

"""Mutable solution state: bundle paths, per-timed-arc bin manifests, platform loads.

All mutation goes through :meth:`Solution.assign` / :meth:`Solution.unassign`
(plus :meth:`Solution.set_manifest` for repacking), which keep the running
cost components up to date and record undo information when a checkpoint is
open.  Checkpoints nest; :meth:`rollback` restores the exact prior state.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .model import SHORTCUT, Instance, Order, TTArc
from .packing import Manifest, commit, tentative_insert

_MISSING = object()

Key = tuple[int, int]  # (arc index, tail week)


class Solution:
    def __init__(self, instance: Instance):
        self.instance = instance
        self.paths: dict[int, list[TTArc]] = {}
        self.manifests: dict[Key, Manifest] = {}
        self.inbound: dict[tuple[int, int], float] = {}
        self.bin_cost = 0.0
        self.commodity_cost = 0.0
        self.overload_cost = 0.0
        self._journal: list[dict] = []

    @property
    def total(self) -> float:
        return self.bin_cost + self.commodity_cost + self.overload_cost

    # -- journal ---------------------------------------------------------------
    def checkpoint(self) -> None:
        self._journal.append({"m": {}, "i": {}, "p": {},
                              "c": (self.bin_cost, self.commodity_cost, self.overload_cost)})

    def rollback(self) -> None:
        j = self._journal.pop()
        for store, saved in ((self.manifests, j["m"]), (self.inbound, j["i"]),
                             (self.paths, j["p"])):
            for k, v in saved.items():
                if v is _MISSING:
                    store.pop(k, None)
                else:
                    store[k] = v
        self.bin_cost, self.commodity_cost, self.overload_cost = j["c"]

    def commit(self) -> None:
        j = self._journal.pop()
        if self._journal:
            outer = self._journal[-1]
            for name in ("m", "i", "p"):
                for k, v in j[name].items():
                    outer[name].setdefault(k, v)

    def _save(self, name: str, store: dict, key) -> None:
        if not self._journal:
            return
        saved = self._journal[-1][name]
        if key in saved:
            return
        v = store.get(key, _MISSING)
        if v is not _MISSING and name == "m":
            v = v.copy()
        elif v is not _MISSING and name == "p":
            v = list(v)
        saved[key] = v

    # -- mutation --------------------------------------------------------------
    def _add_inbound(self, node: tuple[int, int], volume: float) -> None:
        loc = self.instance.network.locations[node[0]]
        self._save("i", self.inbound, node)
        before = self.inbound.get(node, 0.0)
        after = before + volume
        if abs(after) < 1e-9:
            self.inbound.pop(node, None)
            after = 0.0
        else:
            self.inbound[node] = after
        cap = loc.capacity if loc.capacity is not None else float("inf")
        rate = loc.overload_cost or 0.0
        self.overload_cost += rate * (max(0.0, after - cap) - max(0.0, before - cap))

    def manifest(self, key: Key) -> Optional[Manifest]:
        return self.manifests.get(key)

    def set_manifest(self, key: Key, manifest: Manifest) -> None:
        """Replace a manifest holding the same contents (used by repacking)."""
        old = self.manifests.get(key)
        self._save("m", self.manifests, key)
        c = self.instance.network.arcs[key[0]].bin_cost
        self.bin_cost += c * (manifest.n_bins - (old.n_bins if old else 0))
        if manifest.n_bins:
            self.manifests[key] = manifest
        else:
            self.manifests.pop(key, None)

    def add_order(self, order: Order, path: Sequence[TTArc]) -> float:
        inst = self.instance
        net = inst.network
        before = self.total
        for alpha in path:
            if alpha.arc == SHORTCUT:
                continue
            ta = inst.project(alpha, order)
            arc = net.arcs[ta.arc]
            self.commodity_cost += (order.volume * net.volume_rate[ta.arc]
                                    + arc.distance * order.capital)
            head = net.arc_head[ta.arc]
            if net.is_platform(head):
                self._add_inbound((head, ta.head_week), order.volume)
            if arc.consolidated:
                key = (ta.arc, ta.tail_week)
                self._save("m", self.manifests, key)
                m = self.manifests.get(key)
                if m is None:
                    m = Manifest(arc.capacity, max_bins=arc.max_bins)
                    self.manifests[key] = m
                pl = tentative_insert(m, order.items)
                commit(m, pl)
                self.bin_cost += pl.new_bins * arc.bin_cost
        return self.total - before

    def remove_order(self, order: Order, path: Sequence[TTArc]) -> float:
        inst = self.instance
        net = inst.network
        before = self.total
        members = set(order.commodities)
        for alpha in path:
            if alpha.arc == SHORTCUT:
                continue
            ta = inst.project(alpha, order)
            arc = net.arcs[ta.arc]
            self.commodity_cost -= (order.volume * net.volume_rate[ta.arc]
                                    + arc.distance * order.capital)
            head = net.arc_head[ta.arc]
            if net.is_platform(head):
                self._add_inbound((head, ta.head_week), -order.volume)
            if arc.consolidated:
                key = (ta.arc, ta.tail_week)
                self._save("m", self.manifests, key)
                m = self.manifests[key]
                kept = []
                for b in m.bins:
                    if members.intersection(b.contents):
                        for k in members.intersection(b.contents):
                            del b.contents[k]
                        b.load = sum(inst.commodities[k].volume * n
                                     for k, n in b.contents.items())
                    if b.contents:
                        kept.append(b)
                self.bin_cost -= (len(m.bins) - len(kept)) * arc.bin_cost
                m.bins = kept
                if not kept:
                    del self.manifests[key]
        return self.total - before

    def assign(self, bundle: int, path: Sequence[TTArc]) -> float:
        """Route every order of ``bundle`` along ``path``; returns the cost delta."""
        if bundle in self.paths:
            raise ValueError(f"bundle {bundle} already routed")
        self._save("p", self.paths, bundle)
        self.paths[bundle] = list(path)
        delta = 0.0
        for o in self.instance.bundles[bundle].orders:
            delta += self.add_order(self.instance.orders[o], path)
        return delta

    def unassign(self, bundle: int) -> float:
        if bundle not in self.paths:
            raise KeyError(f"bundle {bundle} not in solution")
        path = self.paths[bundle]
        delta = 0.0
        for o in self.instance.bundles[bundle].orders:
            delta += self.remove_order(self.instance.orders[o], path)
        self._save("p", self.paths, bundle)
        del self.paths[bundle]
        return delta

    # -- views -------------------------------------------------------------------
    def copy(self) -> "Solution":
        s = Solution(self.instance)
        s.paths = {b: list(p) for b, p in self.paths.items()}
        s.manifests = {k: m.copy() for k, m in self.manifests.items()}
        s.inbound = dict(self.inbound)
        s.bin_cost, s.commodity_cost, s.overload_cost = (
            self.bin_cost, self.commodity_cost, self.overload_cost)
        return s

    def projected_keys(self, bundle: int) -> set[Key]:
        """Consolidated timed arcs carrying the bundle."""
        inst = self.instance
        keys = set()
        for o in inst.bundles[bundle].orders:
            order = inst.orders[o]
            for alpha in self.paths[bundle]:
                if alpha.arc != SHORTCUT and inst.network.arcs[alpha.arc].consolidated:
                    ta = inst.project(alpha, order)
                    keys.add((ta.arc, ta.tail_week))
        return keys

    def is_direct(self, bundle: int) -> bool:
        net = self.instance.network
        return all(a.arc == SHORTCUT or not net.is_platform(a.head[0])
                   for a in self.paths[bundle])

    def bin_count(self) -> int:
        return sum(m.n_bins for m in self.manifests.values())

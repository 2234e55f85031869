"""Instance, plan and metrics files.

All documents are JSON with sorted keys and a ``schema`` tag.  Lists are
written in id order so that ``dump(load(dump(x))) == dump(x)`` byte for byte.
Writes go through a temporary file and an atomic rename.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Any, Iterable, Optional

from .costing import CostBreakdown, evaluate
from .model import (ARC_ENDPOINTS, SHORTCUT, Arc, ArcKind, Commodity, InfeasibleBundleError,
                    Instance, Location, LocationKind, ModelError, Network, TTArc)
from .packing import Bin, Manifest
from .solution import Solution

INSTANCE_SCHEMA = "stpp-instance/1"
PLAN_SCHEMA = "stpp-plan/1"
METRICS_SCHEMA = "stpp-metrics/1"
REPORT_SCHEMA = "stpp-report/1"


class InstanceValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("\n".join(violations))
        self.violations = violations


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- instances -----------------------------------------------------------------

def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def instance_to_dict(instance: Instance) -> dict:
    net = instance.network
    return {
        "schema": INSTANCE_SCHEMA,
        "meta": _drop_none({"name": instance.name, "horizon": instance.horizon,
                            "seed": instance.seed}),
        "locations": [_drop_none({
            "id": l.id, "kind": l.kind.value, "lat": l.lat, "lon": l.lon,
            "capacity": l.capacity, "unit_cost": l.unit_cost,
            "overload_cost": l.overload_cost}) for l in net.locations],
        "arcs": [_drop_none({
            "id": a.id, "tail": a.tail, "head": a.head, "kind": a.kind.value,
            "travel_time": a.travel_time, "distance": a.distance, "capacity": a.capacity,
            "bin_cost": a.bin_cost, "carbon_cost": a.carbon_cost, "outsourced": a.outsourced,
            "outsource_cost": a.outsource_cost, "max_bins": a.max_bins}) for a in net.arcs],
        "commodities": [{
            "id": c.id, "part": c.part, "supplier": c.supplier, "unit": c.unit,
            "delivery_week": c.delivery_week, "volume": c.volume,
            "max_delivery_time": c.max_delivery_time, "quantity": c.quantity,
            "capital_rate": c.capital_rate} for c in instance.commodities],
    }


def _num(v, name, where, problems, integer=False, minimum=None, strict=False):
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        problems.append(f"{where}: {name} must be {'an integer' if integer else 'a number'}")
        return False
    if minimum is not None and (v <= minimum if strict else v < minimum):
        problems.append(f"{where}: {name} must be {'>' if strict else '>='} {minimum}")
        return False
    return True


def check_instance_dict(doc: dict) -> list[str]:
    """Schema and referential checks; returns every violation found."""
    p: list[str] = []
    if doc.get("schema") != INSTANCE_SCHEMA:
        p.append(f"schema: expected {INSTANCE_SCHEMA!r}, got {doc.get('schema')!r}")
    meta = doc.get("meta") or {}
    horizon = meta.get("horizon")
    if not _num(horizon, "horizon", "meta", p, integer=True, minimum=1):
        horizon = None
    kinds: dict[str, str] = {}
    for i, l in enumerate(doc.get("locations") or []):
        where = f"locations[{i}] ({l.get('id')})"
        if not isinstance(l.get("id"), str):
            p.append(f"{where}: id must be a string")
            continue
        if l["id"] in kinds:
            p.append(f"{where}: duplicate id")
        kind = l.get("kind")
        if kind not in {k.value for k in LocationKind}:
            p.append(f"{where}: unknown kind {kind!r}")
            continue
        kinds[l["id"]] = kind
        fields = ("capacity", "unit_cost", "overload_cost")
        if kind == "platform":
            for f in fields:
                if f not in l:
                    p.append(f"{where}: platform requires {f}")
                else:
                    _num(l[f], f, where, p, minimum=0)
        elif any(f in l for f in fields):
            p.append(f"{where}: platform fields on a non-platform location")
    seen = set()
    max_out_cap: dict[str, float] = {}
    for i, a in enumerate(doc.get("arcs") or []):
        where = f"arcs[{i}] ({a.get('id')})"
        if not isinstance(a.get("id"), str):
            p.append(f"{where}: id must be a string")
            continue
        if a["id"] in seen:
            p.append(f"{where}: duplicate id")
        seen.add(a["id"])
        tail, head = a.get("tail"), a.get("head")
        for end, v in (("tail", tail), ("head", head)):
            if v not in kinds:
                p.append(f"arc {a['id']}: {end} {v!r} is not a known location")
        try:
            kind = ArcKind(a.get("kind"))
        except ValueError:
            p.append(f"{where}: unknown kind {a.get('kind')!r}")
            kind = None
        if kind is not None and tail in kinds and head in kinds:
            want = ARC_ENDPOINTS[kind]
            if (kinds[tail], kinds[head]) != (want[0].value, want[1].value):
                p.append(f"{where}: {kind.value} arc cannot join {kinds[tail]} to {kinds[head]}")
        if _num(a.get("travel_time"), "travel_time", where, p, integer=True, minimum=0):
            if horizon is not None and a["travel_time"] >= horizon:
                p.append(f"{where}: travel_time {a['travel_time']} >= horizon {horizon}")
        _num(a.get("distance"), "distance", where, p, minimum=0)
        if _num(a.get("capacity"), "capacity", where, p, minimum=0, strict=True):
            if tail in kinds:
                max_out_cap[tail] = max(max_out_cap.get(tail, 0.0), a["capacity"])
        _num(a.get("bin_cost"), "bin_cost", where, p, minimum=0)
        _num(a.get("carbon_cost", 0.0), "carbon_cost", where, p, minimum=0)
        if a.get("outsourced"):
            if kind is not ArcKind.COLLECTION:
                p.append(f"{where}: only collection arcs may be outsourced")
            if "outsource_cost" not in a:
                p.append(f"{where}: outsourced arc requires outsource_cost")
            else:
                _num(a["outsource_cost"], "outsource_cost", where, p, minimum=0)
        elif "outsource_cost" in a:
            p.append(f"{where}: outsource_cost on a consolidated arc")
        if a.get("max_bins") is not None:
            _num(a["max_bins"], "max_bins", where, p, integer=True, minimum=1)
    cseen = set()
    for i, c in enumerate(doc.get("commodities") or []):
        where = f"commodities[{i}] ({c.get('id')})"
        if not isinstance(c.get("id"), str):
            p.append(f"{where}: id must be a string")
            continue
        if c["id"] in cseen:
            p.append(f"{where}: duplicate id")
        cseen.add(c["id"])
        if kinds.get(c.get("supplier")) != "supplier":
            p.append(f"{where}: supplier {c.get('supplier')!r} is not a known supplier")
        if kinds.get(c.get("unit")) != "unit":
            p.append(f"{where}: unit {c.get('unit')!r} is not a known production unit")
        if _num(c.get("delivery_week"), "delivery_week", where, p, integer=True, minimum=1):
            if horizon is not None and c["delivery_week"] > horizon:
                p.append(f"{where}: delivery_week beyond horizon")
        if _num(c.get("volume"), "volume", where, p, minimum=0, strict=True):
            cap = max_out_cap.get(c.get("supplier"))
            if cap is not None and c["volume"] > cap:
                p.append(f"{where}: oversize commodity, volume {c['volume']} exceeds every "
                         f"bin leaving its supplier")
        _num(c.get("max_delivery_time"), "max_delivery_time", where, p, integer=True, minimum=1)
        _num(c.get("quantity"), "quantity", where, p, integer=True, minimum=1)
        _num(c.get("capital_rate", 0.0), "capital_rate", where, p, minimum=0)
    return p


def instance_from_dict(doc: dict, check: bool = True) -> Instance:
    if check:
        problems = check_instance_dict(doc)
        if problems:
            raise InstanceValidationError(problems)
    meta = doc["meta"]
    locations = [Location(
        id=l["id"], kind=LocationKind(l["kind"]), lat=l.get("lat", 0.0), lon=l.get("lon", 0.0),
        capacity=l.get("capacity"), unit_cost=l.get("unit_cost"),
        overload_cost=l.get("overload_cost")) for l in doc["locations"]]
    arcs = [Arc(
        id=a["id"], tail=a["tail"], head=a["head"], kind=ArcKind(a["kind"]),
        travel_time=a["travel_time"], distance=a["distance"], capacity=a["capacity"],
        bin_cost=a["bin_cost"], carbon_cost=a.get("carbon_cost", 0.0),
        outsourced=bool(a.get("outsourced", False)), outsource_cost=a.get("outsource_cost"),
        max_bins=a.get("max_bins")) for a in doc["arcs"]]
    commodities = [Commodity(
        id=c["id"], part=c.get("part", c["id"]), supplier=c["supplier"], unit=c["unit"],
        delivery_week=c["delivery_week"], volume=c["volume"],
        max_delivery_time=c["max_delivery_time"], quantity=c.get("quantity", 1),
        capital_rate=c.get("capital_rate", 0.0)) for c in doc["commodities"]]
    return Instance(meta.get("name", "instance"), meta["horizon"], Network(locations, arcs),
                    commodities, seed=meta.get("seed"))


def validate_instance(instance: Instance) -> list[str]:
    """Checks that need the derived structure: bundle feasibility, item sizes."""
    problems = []
    net = instance.network
    for b in instance.bundles:
        try:
            g = instance.bundle_graph(b.index)
        except InfeasibleBundleError:
            continue  # reported separately, see load_instance
        except ModelError as e:
            problems.append(str(e))
            continue
        caps = [net.arcs[a.arc].capacity for a in g.arcs if a.arc != SHORTCUT
                and net.arcs[a.arc].consolidated]
        if caps and b.max_item_volume > min(caps):
            problems.append(f"bundle {b.id}: item volume {b.max_item_volume} exceeds the "
                            f"smallest usable bin capacity {min(caps)}")
    return problems


def load_instance(path, check: bool = True) -> Instance:
    with open(path) as f:
        doc = json.load(f)
    inst = instance_from_dict(doc, check=check)
    if check:
        problems = validate_instance(inst)
        if problems:
            raise InstanceValidationError(problems)
        for b in inst.bundles:
            inst.bundle_graph(b.index)  # raises InfeasibleBundleError
    return inst


def save_instance(instance: Instance, path) -> None:
    atomic_write(path, dumps(instance_to_dict(instance)))


# -- plans ---------------------------------------------------------------------

def plan_to_dict(solution: Solution, breakdown: Optional[CostBreakdown] = None) -> dict:
    inst = solution.instance
    net = inst.network
    if breakdown is None:
        breakdown = evaluate(solution)
    bundles = []
    for b in sorted(solution.paths, key=lambda b: inst.bundles[b].id):
        path = solution.paths[b]
        nodes = [path[0].tail] + [a.head for a in path] if path else []
        bundles.append({
            "bundle": inst.bundles[b].id,
            "nodes": [[net.locations[v].id, t] for v, t in nodes],
            "arcs": [None if a.arc == SHORTCUT else net.arcs[a.arc].id for a in path],
        })
    rows = []
    for (a, w) in sorted(solution.manifests, key=lambda k: (net.arcs[k[0]].id, k[1])):
        for k, bin_ in enumerate(solution.manifests[(a, w)].bins):
            for m in sorted(bin_.contents, key=lambda m: inst.commodities[m].id):
                rows.append({"arc": net.arcs[a].id, "week": w, "bin": k,
                             "commodity": inst.commodities[m].id, "units": bin_.contents[m]})
    return {"schema": PLAN_SCHEMA, "instance": inst.name, "bundles": bundles,
            "manifests": rows, "cost": breakdown.as_dict()}


def plan_from_dict(instance: Instance, doc: dict) -> Solution:
    if doc.get("schema") != PLAN_SCHEMA:
        raise ValueError(f"not a plan document: schema {doc.get('schema')!r}")
    net = instance.network
    sol = Solution(instance)
    for entry in doc["bundles"]:
        b = instance.bundle_index[entry["bundle"]]
        nodes = [(net.loc_index[v], t) for v, t in entry["nodes"]]
        path = [TTArc(SHORTCUT if a is None else net.arc_index[a], nodes[i], nodes[i + 1])
                for i, a in enumerate(entry["arcs"])]
        sol.paths[b] = path
    # flows drive commodity cost and platform inbound; bins come from the file
    for b, path in sorted(sol.paths.items()):
        for o in instance.bundles[b].orders:
            order = instance.orders[o]
            for alpha in path:
                ta = instance.project(alpha, order)
                if ta is None:
                    continue
                arc = net.arcs[ta.arc]
                sol.commodity_cost += (order.volume * net.volume_rate[ta.arc]
                                       + arc.distance * order.capital)
                head = net.arc_head[ta.arc]
                if net.is_platform(head):
                    sol._add_inbound((head, ta.head_week), order.volume)
    for r in doc["manifests"]:
        a = net.arc_index[r["arc"]]
        key = (a, r["week"])
        arc = net.arcs[a]
        m = sol.manifests.get(key)
        if m is None:
            m = sol.manifests[key] = Manifest(arc.capacity, max_bins=arc.max_bins)
        while len(m.bins) <= r["bin"]:
            m.bins.append(Bin())
        m.bins[r["bin"]].add(instance.commodity_index[r["commodity"]],
                             instance.commodities[instance.commodity_index[r["commodity"]]].volume,
                             r["units"])
    sol.bin_cost = sum(net.arcs[k[0]].bin_cost * m.n_bins for k, m in sol.manifests.items())
    return sol


def write_plan(solution: Solution, path) -> CostBreakdown:
    breakdown = evaluate(solution)
    atomic_write(path, dumps(plan_to_dict(solution, breakdown)))
    return breakdown


def load_plan(instance: Instance, path) -> tuple[Solution, CostBreakdown]:
    with open(path) as f:
        doc = json.load(f)
    c = doc.get("cost", {})
    stored = CostBreakdown(c.get("bin_cost", 0.0), c.get("commodity_cost", 0.0),
                           c.get("overload_cost", 0.0))
    return plan_from_dict(instance, doc), stored


def write_manifest_csv(solution: Solution, path) -> None:
    doc = plan_to_dict(solution)
    write_rows_csv(path, ["arc", "week", "bin", "commodity", "units"], doc["manifests"])


# -- metrics / traces ----------------------------------------------------------

def write_metrics(metrics: dict, path) -> None:
    atomic_write(path, dumps({"schema": METRICS_SCHEMA, **metrics}))


def write_report(report: dict, path) -> None:
    atomic_write(path, dumps({"schema": REPORT_SCHEMA, **report}))


def write_rows_csv(path, fields: list[str], rows: Iterable[dict]) -> None:
    import io as _io
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k) for k in fields})
    atomic_write(path, buf.getvalue())


def write_trace(records: Iterable, path) -> None:
    rows = [r if isinstance(r, dict) else asdict(r) for r in records]
    write_rows_csv(path, ["phase", "move", "delta", "total", "elapsed"], rows)

"""Lower bounds on the optimal plan cost and the bound-rounding heuristic.

* linear: bins are paid pro rata to volume; the problem splits into one
  elementary shortest path per bundle.
* mixed: as linear, except direct arcs (which only ever carry one bundle)
  charge whole bins per order.
* full: integer bin counts on every timed arc without any packing, solved as
  one MILP over all bundles; its dual bound is the certificate.

Platform overloads are left out of the decomposable bounds and kept in the
full one, which is still a valid relaxation.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .construct import solution_from_paths
from .insertion import best_elementary_path, liquid_weight
from .milp import solve_milp
from .model import InfeasibleBundleError, Instance, TTArc
from .perturb import BudgetExceededError, build_flow_milp, estimate_flow_vars
from .solution import Solution

KINDS = ("linear", "mixed", "full")


@dataclass
class BoundCertificate:
    kind: str
    value: float
    per_bundle: Optional[dict[str, float]] = None
    elapsed: float = 0.0
    optimal: bool = True  # False when a time limit stopped the full bound early
    overloads: bool = False
    notes: str = ""
    paths: dict[int, list[TTArc]] = field(default_factory=dict, repr=False)

    def as_dict(self, timing: bool = False) -> dict:
        d = {"kind": self.kind, "value": self.value, "optimal": self.optimal,
             "overloads": self.overloads, "notes": self.notes}
        if self.per_bundle is not None:
            d["per_bundle"] = dict(sorted(self.per_bundle.items()))
        if timing:
            d["elapsed"] = self.elapsed
        return d


def _decomposed(instance: Instance, kind: str, mixed: bool) -> BoundCertificate:
    t0 = time.perf_counter()
    per, paths = {}, {}
    for b, bundle in enumerate(instance.bundles):
        cost, path, _ = best_elementary_path(instance.bundle_graph(b),
                                             liquid_weight(instance, b, mixed=mixed), instance)
        if not path:
            raise InfeasibleBundleError(bundle.id)
        per[bundle.id] = cost
        paths[b] = path
    value = sum(per[k] for k in sorted(per))
    return BoundCertificate(kind, value, per, time.perf_counter() - t0, paths=paths)


def linear_bound(instance: Instance) -> BoundCertificate:
    return _decomposed(instance, "linear", mixed=False)


def mixed_giant_bound(instance: Instance) -> BoundCertificate:
    return _decomposed(instance, "mixed", mixed=True)


def full_giant_bound(instance: Instance, time_limit: float = 120.0, budget: Optional[int] = 2_000_000,
                     overload: bool = True, rel_gap: float = 1e-6) -> BoundCertificate:
    """Dual bound of the all-bundle giant-container MILP (no slope scaling)."""
    t0 = time.perf_counter()
    bundles = list(range(len(instance.bundles)))
    if budget is not None and estimate_flow_vars(instance, bundles) > budget:
        raise BudgetExceededError(
            f"full bound needs about {estimate_flow_vars(instance, bundles)} variables, "
            f"budget is {budget}")
    pm = build_flow_milp(Solution(instance), bundles, scaled=False, overload=overload)
    res = solve_milp(pm.model, time_limit=time_limit, mip_rel_gap=rel_gap)
    notes = f"{pm.n_vars} variables, status {res.status}"
    value = max(0.0, res.dual_bound) if res.dual_bound > float("-inf") else 0.0
    paths = pm.decode(res.x) if res.has_solution and not res.relaxed else {}
    return BoundCertificate("full", value, None, time.perf_counter() - t0,
                            optimal=res.optimal, overloads=overload, notes=notes, paths=paths)


def whole_model_lp(instance: Instance, overload: bool = False) -> float:
    """LP relaxation of the all-bundle model; equals the linear bound without overloads."""
    pm = build_flow_milp(Solution(instance), list(range(len(instance.bundles))),
                         scaled=False, overload=overload)
    return solve_milp(pm.model, relax=True).objective


def compute_bound(instance: Instance, kind: str, time_limit: float = 120.0,
                  budget: Optional[int] = 2_000_000) -> BoundCertificate:
    if kind == "linear":
        return linear_bound(instance)
    if kind == "mixed":
        return mixed_giant_bound(instance)
    if kind == "full":
        return full_giant_bound(instance, time_limit, budget)
    raise ValueError(f"unknown bound kind {kind!r}")


def rounding_heuristic(instance: Instance, certificate: Optional[BoundCertificate] = None) -> Solution:
    """Fix the mixed-bound paths and bin-pack every timed arc."""
    cert = certificate if certificate is not None else mixed_giant_bound(instance)
    return solution_from_paths(instance, cert.paths, repack=True)

"""Small MILP container, HiGHS-backed solve, and an LP-file escape hatch.

Models are minimisation problems ``min c.x + constant`` subject to
``row_lb <= A x <= row_ub`` and variable bounds, with an integrality flag per
variable.  ``write_lp`` emits the CPLEX LP text format so any external solver
can be swapped in; ``read_solution`` reads back a plain ``name value`` file.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_array, csr_array


class MilpError(RuntimeError):
    pass


@dataclass
class MilpModel:
    names: list[str] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    rows: list[int] = field(default_factory=list)  # coefficient triplets
    cols: list[int] = field(default_factory=list)
    vals: list[float] = field(default_factory=list)
    row_lb: list[float] = field(default_factory=list)
    row_ub: list[float] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.row_lb)

    def add_var(self, name: str, cost: float = 0.0, lb: float = 0.0, ub: float = math.inf,
                integer: bool = False) -> int:
        self.names.append(name)
        self.cost.append(cost)
        self.lb.append(lb)
        self.ub.append(ub)
        self.integer.append(integer)
        return len(self.names) - 1

    def add_row(self, coefs: dict[int, float] | list[tuple[int, float]], lb: float = -math.inf,
                ub: float = math.inf, name: Optional[str] = None) -> int:
        r = len(self.row_lb)
        items = coefs.items() if isinstance(coefs, dict) else coefs
        for j, v in items:
            if v != 0.0:
                self.rows.append(r)
                self.cols.append(j)
                self.vals.append(v)
        self.row_lb.append(lb)
        self.row_ub.append(ub)
        self.row_names.append(name or f"r{r}")
        return r

    def matrix(self) -> csr_array:
        return coo_array((self.vals, (self.rows, self.cols)),
                         shape=(self.n_rows, self.n_vars)).tocsr()

    def objective(self, x) -> float:
        return float(np.dot(self.cost, x)) + self.constant

    def is_feasible(self, x, tol: float = 1e-6) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < np.asarray(self.lb) - tol) or np.any(x > np.asarray(self.ub) + tol):
            return False
        for j, flag in enumerate(self.integer):
            if flag and abs(x[j] - round(x[j])) > tol:
                return False
        if self.n_rows == 0:
            return True
        ax = self.matrix() @ x
        return bool(np.all(ax >= np.asarray(self.row_lb) - tol)
                    and np.all(ax <= np.asarray(self.row_ub) + tol))


@dataclass
class MilpResult:
    status: str  # optimal | feasible | infeasible | timeout | error
    x: Optional[np.ndarray]
    objective: float  # incumbent value (inf without incumbent)
    dual_bound: float
    relaxed: bool = False

    @property
    def has_solution(self) -> bool:
        return self.x is not None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_milp(model: MilpModel, time_limit: Optional[float] = 120.0, relax: bool = False,
               mip_rel_gap: float = 1e-4) -> MilpResult:
    """Solve with HiGHS branch and bound.

    ``time_limit <= 0`` (or ``relax``) solves the LP relaxation instead; its
    value is then both the objective and the dual bound.
    """
    if model.n_vars == 0:
        return MilpResult("optimal", np.zeros(0), model.constant, model.constant, relax)
    relax = relax or (time_limit is not None and time_limit <= 0)
    integrality = np.zeros(model.n_vars) if relax else np.asarray(model.integer, dtype=float)
    constraints = []
    if model.n_rows:
        constraints.append(LinearConstraint(model.matrix(), model.row_lb, model.row_ub))
    options = {"disp": False, "mip_rel_gap": mip_rel_gap, "presolve": True}
    if time_limit is not None and time_limit > 0:
        options["time_limit"] = float(time_limit)
    res = milp(c=np.asarray(model.cost, dtype=float), constraints=constraints,
               integrality=integrality, bounds=Bounds(model.lb, model.ub), options=options)
    x = None if res.x is None else np.asarray(res.x)
    obj = res.fun + model.constant if x is not None else math.inf
    dual = getattr(res, "mip_dual_bound", None)
    if relax or dual is None or not np.isfinite(dual):
        dual = obj if res.status == 0 else -math.inf
    else:
        dual = float(dual) + model.constant
    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "timeout" if x is None else "feasible"
    elif res.status == 2:
        status = "infeasible"
    else:
        status = "feasible" if x is not None else "error"
    if x is not None:
        x = np.where(integrality > 0, np.round(x), x)
    return MilpResult(status, x, obj, dual, relax)


# -- LP file escape hatch -------------------------------------------------------

def _name(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", s)


def _fmt(v: float) -> str:
    return repr(float(v))


def _terms(pairs) -> str:
    out = []
    for j, v, name in pairs:
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {_fmt(abs(v))} {name}")
    if not out:
        return "0"
    s = " ".join(out)
    return s[2:] if s.startswith("+ ") else s


def write_lp(model: MilpModel, path) -> None:
    """CPLEX LP format; variable names are sanitised, order is preserved."""
    names = [_name(n) for n in model.names]
    if len(set(names)) != len(names):
        names = [f"x{j}_{n}" for j, n in enumerate(names)]
    lines = ["\\ constant " + _fmt(model.constant), "Minimize", " obj: " + _terms(
        (j, c, names[j]) for j, c in enumerate(model.cost) if c != 0.0), "Subject To"]
    by_row: list[list[tuple[int, float]]] = [[] for _ in range(model.n_rows)]
    for r, j, v in zip(model.rows, model.cols, model.vals):
        by_row[r].append((j, v))
    for r in range(model.n_rows):
        expr = _terms((j, v, names[j]) for j, v in by_row[r])
        lo, hi = model.row_lb[r], model.row_ub[r]
        rn = _name(model.row_names[r])
        if lo == hi:
            lines.append(f" {rn}: {expr} = {_fmt(lo)}")
            continue
        if lo > -math.inf:
            lines.append(f" {rn}_lo: {expr} >= {_fmt(lo)}")
        if hi < math.inf:
            lines.append(f" {rn}_hi: {expr} <= {_fmt(hi)}")
    lines.append("Bounds")
    for j in range(model.n_vars):
        lo = "-inf" if model.lb[j] == -math.inf else _fmt(model.lb[j])
        hi = "+inf" if model.ub[j] == math.inf else _fmt(model.ub[j])
        lines.append(f" {lo} <= {names[j]} <= {hi}")
    ints = [names[j] for j in range(model.n_vars) if model.integer[j]]
    if ints:
        lines.append("General")
        lines.extend(f" {n}" for n in ints)
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


def read_solution(model: MilpModel, path) -> np.ndarray:
    """Read ``name value`` lines (other lines ignored); missing variables are zero."""
    names = [_name(n) for n in model.names]
    if len(set(names)) != len(names):
        names = [f"x{j}_{n}" for j, n in enumerate(names)]
    index = {n: j for j, n in enumerate(names)}
    x = np.zeros(model.n_vars)
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if len(parts) >= 2 and parts[0] in index:
            try:
                x[index[parts[0]]] = float(parts[1])
            except ValueError:
                continue
    return x

"""Tunable knobs for the improvement phases, overridable from a JSON file.

Defaults follow the full-scale experimental setting.  Desk-scale runs
usually lower the time limits and the variable budget through a config file:

    {"local_search": {"time_limit": 60}, "perturb": {"variable_budget": 20000}}
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Optional


@dataclass(frozen=True)
class LocalSearchConfig:
    time_limit: float = 2700.0  # seconds per local search
    max_moves: Optional[int] = None  # sampled moves, None = unbounded
    max_stall: Optional[int] = 2000  # consecutive non-improving moves before stopping
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # repack, reinsert, consolidate
    validate_every: int = 0  # 0 disables feasibility checks on accepted moves


@dataclass(frozen=True)
class PerturbConfig:
    milp_time_limit: float = 120.0
    variable_budget: int = 2_000_000
    path_change_threshold: float = 0.15
    path_family_coverage: float = 0.30
    cost_tolerance: float = 0.015  # per round, relative to the cost before the round
    loop_abort: float = 0.02  # cumulative increase that ends the perturbation phase
    k_paths: int = 5
    random_size: int = 20
    max_rounds: int = 20
    mip_rel_gap: float = 1e-4
    flow_families: tuple[str, ...] = ("single_plant", "single_supplier", "random")
    path_families: tuple[str, ...] = ("attract", "reduce")
    directs_last: bool = True


@dataclass(frozen=True)
class ILSConfig:
    time_limit: float = 6 * 3600.0
    rounds: int = 10  # perturbation + local search iterations after the first descent
    local_search: LocalSearchConfig = field(default_factory=LocalSearchConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)


@dataclass(frozen=True)
class SolverConfig:
    ils: ILSConfig = field(default_factory=ILSConfig)
    bound_time_limit: float = 120.0
    bound_rel_gap: float = 1e-6

    @property
    def local_search(self) -> LocalSearchConfig:
        return self.ils.local_search

    @property
    def perturb(self) -> PerturbConfig:
        return self.ils.perturb


class ConfigError(ValueError):
    pass


def _apply(obj, overrides: dict, where: str):
    if not isinstance(overrides, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(obj)}
    changes: dict[str, Any] = {}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        current = getattr(obj, key)
        if is_dataclass(current):
            changes[key] = _apply(current, value, f"{where}.{key}")
        elif isinstance(current, tuple):
            changes[key] = tuple(value)
        else:
            changes[key] = value
    return replace(obj, **changes)


def with_overrides(config: SolverConfig, overrides: dict) -> SolverConfig:
    """Apply a nested dict of overrides.

    Top-level ``local_search`` and ``perturb`` keys are accepted as shorthands
    for ``ils.local_search`` and ``ils.perturb``.
    """
    overrides = dict(overrides)
    ils = dict(overrides.pop("ils", {}) or {})
    for short in ("local_search", "perturb"):
        if short in overrides:
            ils.setdefault(short, {})
            ils[short] = {**ils[short], **overrides.pop(short)}
    if ils:
        overrides["ils"] = ils
    return _apply(config, overrides, "config")


def load_config(path: Optional[str | Path]) -> SolverConfig:
    config = SolverConfig()
    if path is None:
        return config
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return with_overrides(config, doc)


def config_dict(config) -> dict:
    return asdict(config)

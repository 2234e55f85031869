"""Desk-scale solver settings shared by the experiment scripts."""
from stpp.config import ILSConfig, LocalSearchConfig, PerturbConfig, SolverConfig


def desk_config(ils_seconds: float = 180.0) -> SolverConfig:
    return SolverConfig(ils=ILSConfig(
        time_limit=ils_seconds, rounds=10, local_search=LocalSearchConfig(max_stall=400),
        perturb=PerturbConfig(milp_time_limit=5, variable_budget=20_000, max_rounds=6,
                              mip_rel_gap=0.01)))

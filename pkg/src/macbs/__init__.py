"""Conflict-based search with meta-agent merging for sum-of-costs MAPF."""
from .cbs import (
    CBS,
    DELAYED,
    MA_CBS,
    MA_CBS_R,
    RANDOMIZED,
    VARIANTS,
    NoSolution,
    SearchLimitReached,
    Solution,
    SolverConfig,
    solve,
)
from .core import GridMap, Instance, SearchStats, detect_conflicts, path_cost, sic, validate_solution

__all__ = [
    "CBS", "DELAYED", "MA_CBS", "MA_CBS_R", "RANDOMIZED", "VARIANTS",
    "GridMap", "Instance", "NoSolution", "SearchLimitReached", "SearchStats",
    "Solution", "SolverConfig", "detect_conflicts", "path_cost", "sic", "solve",
    "validate_solution",
]

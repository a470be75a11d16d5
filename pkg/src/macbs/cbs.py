"""High-level constraint-tree search: CBS, MA-CBS and the restarting variants.

Every variant shares one loop. A popped node without conflicts is returned;
otherwise its first conflict (by time, lower agent, vertex before edge) is
either split on or resolved by merging the two meta-agents involved. The
variants differ only in how that decision is made and whether a merge
restarts the search from a fresh root.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    EDGE,
    VERTEX,
    Conflict,
    Constraint,
    Instance,
    Path,
    SearchStats,
    detect_conflicts,
    path_cost,
)
from .lowlevel import ConstraintSet, NoPathError, plan_meta
from .policies import PolicyState, should_merge_delayed, should_merge_fixed

CBS = "CBS"
MA_CBS = "MA-CBS"
MA_CBS_R = "MA-CBS/R"
RANDOMIZED = "MA-CBS/R-randomized"
DELAYED = "MA-CBS/R-delayed"
VARIANTS = (CBS, MA_CBS, MA_CBS_R, RANDOMIZED, DELAYED)
RESTARTING = (MA_CBS_R, RANDOMIZED, DELAYED)

Partition = tuple[tuple[int, ...], ...]


class NoSolution(Exception):
    """The constraint tree was exhausted: the instance has no solution."""

    def __init__(self, stats: SearchStats, message: str = "instance is unsolvable"):
        super().__init__(message)
        self.stats = stats


class SearchLimitReached(Exception):
    """A node or time cap tripped; ``stats`` holds the work done so far."""

    def __init__(self, stats: SearchStats, message: str = "search limit reached"):
        super().__init__(message)
        self.stats = stats


@dataclass
class SolverConfig:
    variant: str = CBS
    B: float = math.inf
    max_meta_size: int = 2
    rng_seed: int = 0
    node_limit: Optional[int] = None  # cap on low-level expansions
    time_limit: Optional[float] = None  # seconds
    count_mode: str = "pop"  # "pop": chosen conflict only; "all": every conflict of the popped node

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == CBS:
            self.B = math.inf
        if not (self.B >= 1):
            raise ValueError("B must be a positive integer or infinity")
        if self.max_meta_size < 2:
            raise ValueError("max_meta_size must be at least 2")
        if self.variant == RANDOMIZED and math.isinf(self.B):
            raise ValueError("the randomized variant needs a finite B")
        if self.count_mode not in ("pop", "all"):
            raise ValueError("count_mode is 'pop' or 'all'")


@dataclass
class CTNode:
    partition: Partition
    constraints: tuple[Constraint, ...]
    solution: tuple[Path, ...]
    cost: int
    conflicts: list[Conflict]
    seq: int = 0

    def meta_of(self, agent: int) -> tuple[int, ...]:
        for meta in self.partition:
            if agent in meta:
                return meta
        raise KeyError(agent)


class NodeList:
    """Open list ordered by (cost, insertion sequence)."""

    def __init__(self, nodes: Sequence[CTNode] = ()):
        self._heap: list = []
        self._seq = 0
        for n in nodes:
            self.push(n)

    def push(self, node: CTNode) -> None:
        node.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (node.cost, node.seq, node))

    def pop(self) -> CTNode:
        return heapq.heappop(self._heap)[2]

    def peek_cost(self) -> Optional[int]:
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)


@dataclass
class Solution:
    paths: tuple[Path, ...]
    cost: int
    stats: SearchStats
    partition: Partition = field(default=())


def _plan(instance: Instance, meta, constraints, stats, cache: Optional[dict] = None) -> list[Path]:
    mine = [c for c in constraints if c.agent in meta]
    if not mine and cache is not None and meta in cache:
        return cache[meta]
    paths = plan_meta(
        instance.map,
        meta,
        [instance.starts[a] for a in meta],
        [instance.goals[a] for a in meta],
        ConstraintSet(mine),
        stats,
    )
    if not mine and cache is not None:
        cache[meta] = paths
    return paths


def _node(instance: Instance, partition, constraints, solution) -> CTNode:
    solution = tuple(solution)
    cost = sum(path_cost(p, g) for p, g in zip(solution, instance.goals))
    return CTNode(partition, tuple(constraints), solution, cost, detect_conflicts(solution))


def make_root(instance: Instance, partition: Partition, stats: SearchStats, cache: Optional[dict] = None) -> CTNode:
    """Unconstrained plans for every meta-agent of ``partition``.

    ``cache`` maps a meta-agent to its unconstrained plan; a restart only
    pays for meta-agents it has not planned before.
    """
    solution: list = [None] * instance.num_agents
    for meta in partition:
        for a, p in zip(meta, _plan(instance, meta, (), stats, cache)):
            solution[a] = p
    return _node(instance, partition, (), solution)


def conflict_constraints(conflict: Conflict) -> tuple[Constraint, Constraint]:
    a, b, t = conflict.a1, conflict.a2, conflict.time
    if conflict.kind == VERTEX:
        return (
            Constraint(a, VERTEX, t, conflict.location, against=b),
            Constraint(b, VERTEX, t, conflict.location, against=a),
        )
    src, dst = conflict.location
    return (
        Constraint(a, EDGE, t, (src, dst), against=b),
        Constraint(b, EDGE, t, (dst, src), against=a),
    )


def split(instance: Instance, node: CTNode, conflict: Conflict, stats: SearchStats) -> list[CTNode]:
    """Children forbidding each side of ``conflict``; unplannable children are dropped."""
    children = []
    for con in conflict_constraints(conflict):
        meta = node.meta_of(con.agent)
        constraints = node.constraints + (con,)
        try:
            paths = _plan(instance, meta, constraints, stats)
        except NoPathError:
            continue
        solution = list(node.solution)
        for a, p in zip(meta, paths):
            solution[a] = p
        children.append(_node(instance, node.partition, constraints, solution))
    return children


def _merged_partition(partition: Partition, meta_a, meta_b) -> tuple[Partition, tuple[int, ...]]:
    union = tuple(sorted(meta_a + meta_b))
    rest = [m for m in partition if m != meta_a and m != meta_b]
    return tuple(sorted(rest + [union])), union


def merge(instance: Instance, node: CTNode, meta_a, meta_b, stats: SearchStats) -> Optional[CTNode]:
    """Child with the pair joined; constraints between the two are dropped,
    constraints against outsiders kept. None if the joint replan fails.

    The joint plan is always searched afresh, even when no constraint
    survives: every merge in the tree pays for its combined agent.
    """
    partition, union = _merged_partition(node.partition, meta_a, meta_b)
    constraints = tuple(
        c for c in node.constraints if not (c.agent in union and c.against in union)
    )
    try:
        paths = _plan(instance, union, constraints, stats)
    except NoPathError:
        return None
    solution = list(node.solution)
    for a, p in zip(union, paths):
        solution[a] = p
    return _node(instance, partition, constraints, solution)


def merge_restart(instance: Instance, node: CTNode, meta_a, meta_b, stats: SearchStats, cache: Optional[dict] = None) -> CTNode:
    """Fresh unconstrained root over the merged partition.

    With ``cache`` the unchanged meta-agents reuse their unconstrained plans,
    so a restart pays only for the newly merged agent.
    """
    partition, _ = _merged_partition(node.partition, meta_a, meta_b)
    try:
        return make_root(instance, partition, stats, cache)
    except NoPathError as exc:
        raise NoSolution(stats, f"merged agents cannot reach their goals: {exc}") from exc


def solve(instance: Instance, config: Optional[SolverConfig] = None, trace: Optional[list] = None) -> Solution:
    """Minimum sum-of-costs solution under ``config``.

    Raises NoSolution when the instance is unsolvable and SearchLimitReached
    when a configured cap trips. If ``trace`` is a list, one dict per popped
    conflicting node is appended describing the decision taken.
    """
    config = config or SolverConfig()
    stats = SearchStats()
    started = time.perf_counter()
    policy = PolicyState(config.B, config.rng_seed)
    variant = config.variant
    plans: dict = {}

    def finish():
        stats.wall_time = time.perf_counter() - started

    try:
        partition = tuple((a,) for a in range(instance.num_agents))
        try:
            root = make_root(instance, partition, stats, plans)
        except NoPathError as exc:
            raise NoSolution(stats, str(exc)) from exc
        open_list = NodeList([root])
        while open_list:
            if config.node_limit is not None and stats.expanded >= config.node_limit:
                raise SearchLimitReached(stats, f"node limit {config.node_limit} reached")
            if config.time_limit is not None and time.perf_counter() - started >= config.time_limit:
                raise SearchLimitReached(stats, f"time limit {config.time_limit}s reached")
            node = open_list.pop()
            stats.highlevel_pops += 1
            if not node.conflicts:
                finish()
                return Solution(node.solution, node.cost, stats, node.partition)

            conflict = node.conflicts[0]
            meta_a, meta_b = node.meta_of(conflict.a1), node.meta_of(conflict.a2)
            if config.count_mode == "pop":
                policy.counter.add(conflict.a1, conflict.a2)
            else:
                for c in node.conflicts:
                    policy.counter.add(c.a1, c.a2)
            k = policy.counter.between(meta_a, meta_b)

            merging = False
            if variant != CBS and len(meta_a) + len(meta_b) <= config.max_meta_size:
                if variant in (MA_CBS, MA_CBS_R):
                    merging = should_merge_fixed(k, config.B)
                elif variant == RANDOMIZED:
                    merging = policy.should_merge_randomized(meta_a, meta_b)
                else:
                    merging = should_merge_delayed(k, config.B, node.cost, open_list.peek_cost())

            if trace is not None:
                trace.append({
                    "pop": stats.highlevel_pops,
                    "cost": node.cost,
                    "next_cost": open_list.peek_cost(),
                    "pair": (meta_a, meta_b),
                    "k": k,
                    "action": ("restart" if variant in RESTARTING else "merge") if merging else "split",
                })

            if not merging:
                stats.splits += 1
                for child in split(instance, node, conflict, stats):
                    open_list.push(child)
            elif variant in RESTARTING:
                stats.merges += 1
                stats.restarts += 1
                open_list = NodeList([merge_restart(instance, node, meta_a, meta_b, stats, plans)])
            else:
                stats.merges += 1
                child = merge(instance, node, meta_a, meta_b, stats)
                if child is not None:
                    open_list.push(child)
        raise NoSolution(stats)
    finally:
        finish()

"""Grid maps, instances, paths, conflicts and sum-of-costs accounting.

Positions are plain ``(x, y)`` tuples, ``x`` the column and ``y`` the row.
A path is a tuple of positions indexed by time step; after its last entry
the agent stays at its final position forever.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

Position = tuple[int, int]
Path = tuple[Position, ...]

VERTEX = "vertex"
EDGE = "edge"


class InvalidPathError(ValueError):
    pass


@dataclass(frozen=True)
class GridMap:
    """4-connected grid; ``passable`` is row-major, ``width * height`` long."""

    width: int
    height: int
    passable: tuple[bool, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(self.passable) != self.width * self.height:
            raise ValueError(
                f"passability table has {len(self.passable)} cells, "
                f"expected {self.width * self.height}"
            )
        if not any(self.passable):
            raise ValueError("grid has no passable cell")

    @classmethod
    def open(cls, width: int, height: int) -> "GridMap":
        return cls(width, height, (True,) * (width * height))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "GridMap":
        """Build from rows of '.' (free) and '@' (blocked), top row first."""
        height = len(rows)
        width = len(rows[0]) if rows else 0
        cells = []
        for row in rows:
            if len(row) != width:
                raise ValueError("ragged rows")
            cells.extend(ch != "@" for ch in row)
        return cls(width, height, tuple(cells))

    def in_bounds(self, pos: Position) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height

    def is_passable(self, pos: Position) -> bool:
        return self.in_bounds(pos) and self.passable[pos[1] * self.width + pos[0]]

    @cached_property
    def cells(self) -> tuple[Position, ...]:
        return tuple(
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.passable[y * self.width + x]
        )

    @cached_property
    def neighbors(self) -> dict[Position, tuple[Position, ...]]:
        """Passable 4-neighbors of every passable cell (E, W, S, N order)."""
        table = {}
        for x, y in self.cells:
            adj = ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))
            table[(x, y)] = tuple(p for p in adj if self.is_passable(p))
        return table

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def distance_tables(self) -> dict:
        # goal -> true-distance table; shared by every search on this map
        return {}


@dataclass(frozen=True)
class Instance:
    map: GridMap
    starts: tuple[Position, ...]
    goals: tuple[Position, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.starts) != len(self.goals):
            raise ValueError("starts and goals differ in length")
        if not self.starts:
            raise ValueError("instance needs at least one agent")
        if len(set(self.starts)) != len(self.starts):
            raise ValueError("starts are not pairwise distinct")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goals are not pairwise distinct")
        for p in self.starts + self.goals:
            if not self.map.is_passable(p):
                raise ValueError(f"position {p} is not a passable cell")

    @property
    def num_agents(self) -> int:
        return len(self.starts)


class Conflict(NamedTuple):
    """A collision between agents ``a1 < a2``.

    For an edge conflict ``time`` is the departure step (the swap happens
    between ``time`` and ``time + 1``) and ``location`` is the directed edge
    traversed by ``a1``.
    """

    time: int
    a1: int
    kind_rank: int  # 0 vertex, 1 edge; sorts vertex before edge
    a2: int
    location: tuple

    @property
    def kind(self) -> str:
        return VERTEX if self.kind_rank == 0 else EDGE

    @property
    def agents(self) -> tuple[int, int]:
        return (self.a1, self.a2)


class Constraint(NamedTuple):
    """Forbids ``agent`` from occupying a cell at ``time`` (vertex) or from
    traversing the directed edge ``location`` departing at ``time`` (edge).

    ``against`` records the agent on the other side of the conflict that
    produced the constraint, so merges can drop constraints that became
    internal to a meta-agent.
    """

    agent: int
    kind: str
    time: int
    location: tuple
    against: Optional[int] = None


def at(path: Path, t: int) -> Position:
    return path[t] if t < len(path) else path[-1]


def path_cost(path: Path, goal: Position) -> int:
    """Arrival time: earliest t after which the path stays at ``goal``."""
    if not path or path[-1] != goal:
        raise InvalidPathError("path does not end at its goal")
    t = len(path) - 1
    while t > 0 and path[t - 1] == goal:
        t -= 1
    return t


def sic(solution: Sequence[Path], instance: Instance) -> int:
    if len(solution) != instance.num_agents:
        raise ValueError("one path per agent required")
    return sum(path_cost(p, g) for p, g in zip(solution, instance.goals))


def detect_conflicts(solution: Sequence[Path]) -> list[Conflict]:
    """Every vertex and edge conflict, sorted by (time, lower agent, kind)."""
    n = len(solution)
    if n < 2:
        return []
    horizon = max(len(p) for p in solution)
    conflicts = []
    for t in range(horizon):
        seen: dict[Position, list[int]] = {}
        for i, p in enumerate(solution):
            seen.setdefault(at(p, t), []).append(i)
        for cell, occupants in seen.items():
            if len(occupants) > 1:
                for u in range(len(occupants)):
                    for v in range(u + 1, len(occupants)):
                        conflicts.append(Conflict(t, occupants[u], 0, occupants[v], (cell,)))
        if t + 1 >= horizon:
            continue
        moves: dict[tuple, list[int]] = {}
        for i, p in enumerate(solution):
            src, dst = at(p, t), at(p, t + 1)
            if src != dst:
                moves.setdefault((src, dst), []).append(i)
        for (src, dst), movers in moves.items():
            for j in moves.get((dst, src), ()):
                for i in movers:
                    if i < j:
                        conflicts.append(Conflict(t, i, 1, j, (src, dst)))
    conflicts.sort()
    return conflicts


def solution_error(instance: Instance, solution: Sequence[Path]) -> Optional[str]:
    """Why ``solution`` is not a valid plan for ``instance``, or None."""
    if len(solution) != instance.num_agents:
        return f"expected {instance.num_agents} paths, got {len(solution)}"
    grid = instance.map
    for i, (path, s, g) in enumerate(zip(solution, instance.starts, instance.goals)):
        if not path:
            return f"agent {i}: empty path"
        if path[0] != s:
            return f"agent {i}: path starts at {path[0]}, not {s}"
        if path[-1] != g:
            return f"agent {i}: path ends at {path[-1]}, not {g}"
        for t, p in enumerate(path):
            if not grid.is_passable(p):
                return f"agent {i}: impassable cell {p} at t={t}"
            if t and p != path[t - 1] and p not in grid.neighbors[path[t - 1]]:
                return f"agent {i}: illegal move {path[t - 1]}->{p} at t={t - 1}"
    conflicts = detect_conflicts(solution)
    if conflicts:
        c = conflicts[0]
        return f"{c.kind} conflict between agents {c.a1} and {c.a2} at t={c.time}"
    return None


def validate_solution(instance: Instance, solution: Sequence[Path]) -> bool:
    return solution_error(instance, solution) is None


@dataclass
class SearchStats:
    """Counters collected over one solve call.

    ``expanded`` counts one per low-level expansion, joint or single;
    ``expanded_weighted`` weights a joint expansion by the meta-agent size.
    """

    expanded: int = 0
    expanded_weighted: int = 0
    highlevel_pops: int = 0
    splits: int = 0
    merges: int = 0
    restarts: int = 0
    wall_time: float = 0.0

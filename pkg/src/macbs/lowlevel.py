"""Space-time A* for single agents and for meta-agents planned jointly.

Both searches treat the map's true-distance tables as the heuristic and
break ties on lower h, then insertion order, so expansion counts are
reproducible run to run.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from itertools import count
from typing import Iterable, Optional, Sequence

from .core import EDGE, VERTEX, Constraint, GridMap, Path, Position, SearchStats

INF = math.inf


class NoPathError(RuntimeError):
    pass


def distance_table(grid: GridMap, goal: Position) -> dict[Position, int]:
    """Breadth-first distances to ``goal``; unreachable cells are absent."""
    table = grid.distance_tables.get(goal)
    if table is None:
        table = {goal: 0}
        frontier = deque([goal])
        nbrs = grid.neighbors
        while frontier:
            cur = frontier.popleft()
            d = table[cur] + 1
            for nxt in nbrs[cur]:
                if nxt not in table:
                    table[nxt] = d
                    frontier.append(nxt)
        grid.distance_tables[goal] = table
    return table


def true_distance(grid: GridMap, start: Position, goal: Position) -> float:
    return distance_table(grid, goal).get(start, INF)


class ConstraintSet:
    """Constraints of one meta-agent, indexed per member for O(1) lookup."""

    def __init__(self, constraints: Iterable[Constraint] = ()):
        self.records: tuple[Constraint, ...] = tuple(constraints)
        self._vertex: dict[int, set] = {}
        self._edge: dict[int, set] = {}
        self._last: dict[int, int] = {}
        for c in self.records:
            if c.kind == VERTEX:
                self._vertex.setdefault(c.agent, set()).add((c.location[0], c.time))
            elif c.kind == EDGE:
                self._edge.setdefault(c.agent, set()).add((c.location[0], c.location[1], c.time))
            else:
                raise ValueError(f"unknown constraint kind {c.kind!r}")
            self._last[c.agent] = max(self._last.get(c.agent, -1), c.time)

    def __len__(self):
        return len(self.records)

    def vertex_blocked(self, agent: int, pos: Position, t: int) -> bool:
        v = self._vertex.get(agent)
        return v is not None and (pos, t) in v

    def edge_blocked(self, agent: int, src: Position, dst: Position, t: int) -> bool:
        e = self._edge.get(agent)
        return e is not None and (src, dst, t) in e

    def last_time(self, agent: Optional[int] = None) -> int:
        """Latest constrained step for ``agent`` (all agents if None); -1 if none."""
        if agent is None:
            return max(self._last.values(), default=-1)
        return self._last.get(agent, -1)

    def last_block(self, agent: int, cell: Position) -> int:
        """Latest step at which ``agent`` is barred from ``cell``; -1 if never."""
        v = self._vertex.get(agent, ())
        return max((t for p, t in v if p == cell), default=-1)

    def vertex_table(self, agent: int) -> set:
        return self._vertex.get(agent, set())

    def edge_table(self, agent: int) -> set:
        return self._edge.get(agent, set())


_EMPTY = ConstraintSet()


def _trim(path: list[Position]) -> Path:
    end = len(path)
    while end > 1 and path[end - 2] == path[end - 1]:
        end -= 1
    return tuple(path[:end])


def plan_single(
    grid: GridMap,
    start: Position,
    goal: Position,
    constraints: Optional[ConstraintSet] = None,
    stats: Optional[SearchStats] = None,
    agent: int = 0,
) -> Path:
    """Cheapest path for ``agent`` from ``start`` to ``goal`` under ``constraints``.

    Search states are (cell, time). Beyond the last constrained step the time
    coordinate is folded, since waiting can no longer help; states later than
    ``last constraint + number of cells`` are pruned.
    """
    cons = constraints or _EMPTY
    h_table = distance_table(grid, goal)
    if start not in h_table:
        raise NoPathError(f"{goal} unreachable from {start}")
    vertex = cons.vertex_table(agent)
    edge = cons.edge_table(agent)
    last = cons.last_time(agent)
    goal_block = cons.last_block(agent, goal)
    horizon = last + grid.num_cells
    fold = last + 1
    nbrs = grid.neighbors

    seq = count()
    h0 = h_table[start]
    # (f, h, seq, cell, t, parent entry)
    open_list = [(h0, h0, next(seq), start, 0, None)]
    closed = set()
    expanded = 0
    try:
        while open_list:
            entry = heapq.heappop(open_list)
            _, _, _, pos, t, _ = entry
            key = (pos, t if t < fold else fold)
            if key in closed:
                continue
            closed.add(key)
            expanded += 1
            if pos == goal and t >= goal_block:
                path = []
                while entry is not None:
                    path.append(entry[3])
                    entry = entry[5]
                path.reverse()
                return _trim(path)
            nt = t + 1
            if nt > horizon:
                continue
            nkey_t = nt if nt < fold else fold
            for nxt in (pos,) + nbrs[pos]:
                if (nxt, nkey_t) in closed:
                    continue
                if (nxt, nt) in vertex or (pos, nxt, t) in edge:
                    continue
                h = h_table.get(nxt)
                if h is None:
                    continue
                heapq.heappush(open_list, (nt + h, h, next(seq), nxt, nt, entry))
        raise NoPathError(f"no path {start}->{goal} under {len(cons)} constraints")
    finally:
        if stats is not None:
            stats.expanded += expanded
            stats.expanded_weighted += expanded


def plan_meta(
    grid: GridMap,
    meta: Sequence[int],
    starts: Sequence[Position],
    goals: Sequence[Position],
    constraints: Optional[ConstraintSet] = None,
    stats: Optional[SearchStats] = None,
) -> list[Path]:
    """Jointly optimal, mutually conflict-free paths for the members of ``meta``.

    ``starts`` and ``goals`` are aligned with ``meta``; constraints name
    original agent ids. A member sitting on its goal may commit to staying
    there, after which it costs nothing and never moves again. The joint
    state is (cells, committed flags, time), with time folded past the last
    constrained step.
    """
    meta = tuple(meta)
    if len(meta) == 1:
        return [plan_single(grid, starts[0], goals[0], constraints, stats, agent=meta[0])]
    cons = constraints or _EMPTY
    m = len(meta)
    starts = tuple(starts)
    goals = tuple(goals)
    h_tables = [distance_table(grid, g) for g in goals]
    for s, g, h in zip(starts, goals, h_tables):
        if s not in h:
            raise NoPathError(f"{g} unreachable from {s}")
    vertex = [cons.vertex_table(a) for a in meta]
    edge = [cons.edge_table(a) for a in meta]
    goal_block = [cons.last_block(a, g) for a, g in zip(meta, goals)]
    fold = max(cons.last_time(a) for a in meta) + 1
    nbrs = grid.neighbors

    def successors(positions, done, t):
        # Each member option is (next cell, committed); generated member by
        # member in index order with pruning on internal conflicts.
        nt = t + 1
        options = []
        for i in range(m):
            pos = positions[i]
            if done[i]:
                options.append(((pos, True),))
                continue
            opts = []
            vt, et = vertex[i], edge[i]
            for nxt in (pos,) + nbrs[pos]:
                if (nxt, nt) in vt or (pos, nxt, t) in et:
                    continue
                if nxt not in h_tables[i]:
                    continue
                opts.append((nxt, False))
            if pos == goals[i] and goal_block[i] < nt:
                opts.append((pos, True))
            options.append(tuple(opts))

        chosen: list = [None] * m

        def rec(i):
            if i == m:
                yield tuple(chosen)
                return
            src = positions[i]
            for nxt, fin in options[i]:
                ok = True
                for j in range(i):
                    other = chosen[j][0]
                    if other == nxt or (other == src and positions[j] == nxt):
                        ok = False
                        break
                if ok:
                    chosen[i] = (nxt, fin)
                    yield from rec(i + 1)

        return rec(0)

    def is_goal(positions, done, t):
        for i in range(m):
            if not done[i] and (positions[i] != goals[i] or goal_block[i] > t):
                return False
        return True

    seq = count()
    done0 = (False,) * m
    h0 = sum(h[s] for h, s in zip(h_tables, starts))
    # (f, h, seq, g, cells, done, t, parent entry)
    open_list = [(h0, h0, next(seq), 0, starts, done0, 0, None)]
    closed = set()
    expanded = 0
    try:
        while open_list:
            entry = heapq.heappop(open_list)
            _, _, _, g, positions, done, t, _ = entry
            key = (positions, done, t if t < fold else fold)
            if key in closed:
                continue
            closed.add(key)
            expanded += 1
            if is_goal(positions, done, t):
                trail = []
                while entry is not None:
                    trail.append(entry[4])
                    entry = entry[7]
                trail.reverse()
                return [_trim([cells[i] for cells in trail]) for i in range(m)]
            nt = t + 1
            nkey_t = nt if nt < fold else fold
            for step in successors(positions, done, t):
                cells = tuple(c for c, _ in step)
                ndone = tuple(f for _, f in step)
                if (cells, ndone, nkey_t) in closed:
                    continue
                ng = g + ndone.count(False)
                h = 0
                for i in range(m):
                    if not ndone[i]:
                        h += h_tables[i][cells[i]]
                heapq.heappush(open_list, (ng + h, h, next(seq), ng, cells, ndone, nt, entry))
        raise NoPathError(f"no joint plan for meta-agent {meta}")
    finally:
        if stats is not None:
            stats.expanded += expanded
            stats.expanded_weighted += expanded * m

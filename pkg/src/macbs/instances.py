"""Instance sources: MovingAI maps and scenarios, puzzle scenes, bottlenecks.

MovingAI glyphs: '.', 'G' and 'S' (swamp, unit cost here) are passable;
'@', 'O', 'T' and 'W' are blocked.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import GridMap, Instance, Position

PASSABLE_GLYPHS = frozenset(".GS")
BLOCKED_GLYPHS = frozenset("@OTW")

PUZZLE_SIZE = 4


class MapParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioParseError(ValueError):
    pass


def parse_map(text: str) -> GridMap:
    """Parse a MovingAI ``.map`` file body."""
    lines = text.splitlines()

    def header(idx: int, key: str) -> str:
        if idx >= len(lines):
            raise MapParseError(idx + 1, f"missing '{key}' header")
        parts = lines[idx].split()
        if not parts or parts[0] != key:
            raise MapParseError(idx + 1, f"expected '{key}' header, got {lines[idx]!r}")
        return " ".join(parts[1:])

    header(0, "type")
    dims = {}
    for idx in (1, 2):
        parts = lines[idx].split() if idx < len(lines) else []
        if len(parts) != 2 or parts[0] not in ("height", "width") or parts[0] in dims:
            raise MapParseError(idx + 1, "expected 'height N' and 'width M' headers")
        try:
            value = int(parts[1])
        except ValueError:
            raise MapParseError(idx + 1, f"{parts[0]} is not an integer: {parts[1]!r}") from None
        if value <= 0:
            raise MapParseError(idx + 1, f"{parts[0]} must be positive")
        dims[parts[0]] = value
    if header(3, "map"):
        raise MapParseError(4, "unexpected text after 'map'")
    height, width = dims["height"], dims["width"]

    cells = []
    for r in range(height):
        lineno = 5 + r
        if 4 + r >= len(lines):
            raise MapParseError(lineno, f"expected {height} grid rows, found {r}")
        row = lines[4 + r].rstrip("\r")
        if len(row) != width:
            raise MapParseError(lineno, f"row has {len(row)} cells, expected {width}")
        for col, ch in enumerate(row):
            if ch in PASSABLE_GLYPHS:
                cells.append(True)
            elif ch in BLOCKED_GLYPHS:
                cells.append(False)
            else:
                raise MapParseError(lineno, f"unknown glyph {ch!r} in column {col}")
    for extra in range(4 + height, len(lines)):
        if lines[extra].strip():
            raise MapParseError(extra + 1, "text after the last grid row")
    if not any(cells):
        raise MapParseError(5, "map has no passable cell")
    return GridMap(width, height, tuple(cells))


def serialize_map(grid: GridMap, map_type: str = "octile") -> str:
    rows = [
        "".join("." if grid.passable[y * grid.width + x] else "@" for x in range(grid.width))
        for y in range(grid.height)
    ]
    return "\n".join([f"type {map_type}", f"height {grid.height}", f"width {grid.width}", "map", *rows]) + "\n"


def read_map(path) -> GridMap:
    with open(path) as f:
        return parse_map(f.read())


@dataclass(frozen=True)
class ScenarioRecord:
    map_name: str
    start: Position
    goal: Position
    width: int
    height: int
    bucket: int = 0
    optimal_length: float = -1


def parse_scenario(text: str) -> list[ScenarioRecord]:
    """Tab-separated records: bucket, map, width, height, sx, sy, gx, gy, length.

    A leading ``version`` line is optional.
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or (lineno == 1 and line.split()[0] == "version"):
            continue
        fields = line.split("\t")
        if len(fields) != 9:
            fields = line.split()
        if len(fields) != 9:
            raise ScenarioParseError(f"line {lineno}: expected 9 fields, got {len(fields)}")
        try:
            bucket, w, h, sx, sy, gx, gy = (int(v) for v in (fields[0], *fields[2:8]))
            opt = float(fields[8])
        except ValueError as exc:
            raise ScenarioParseError(f"line {lineno}: {exc}") from None
        if not (0 <= sx < w and 0 <= gx < w and 0 <= sy < h and 0 <= gy < h):
            raise ScenarioParseError(f"line {lineno}: position outside {w}x{h} map")
        records.append(ScenarioRecord(fields[1], (sx, sy), (gx, gy), w, h, bucket, opt))
    return records


def _fmt_length(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def format_scenario(records: Iterable[ScenarioRecord]) -> str:
    out = ["version 1"]
    for r in records:
        out.append("\t".join(map(str, (
            r.bucket, r.map_name, r.width, r.height,
            r.start[0], r.start[1], r.goal[0], r.goal[1],
        ))) + "\t" + _fmt_length(r.optimal_length))
    return "\n".join(out) + "\n"


def read_scenario(path) -> list[ScenarioRecord]:
    with open(path) as f:
        return parse_scenario(f.read())


def scenario_records(instance: Instance, map_name: str, optimal_lengths: Optional[Sequence[float]] = None) -> list[ScenarioRecord]:
    grid = instance.map
    lengths = optimal_lengths or [-1] * instance.num_agents
    return [
        ScenarioRecord(map_name, s, g, grid.width, grid.height, 0, length)
        for s, g, length in zip(instance.starts, instance.goals, lengths)
    ]


def instance_from_scenario(grid: GridMap, records: Sequence[ScenarioRecord], n_agents: Optional[int] = None, name: str = "") -> Instance:
    chosen = list(records if n_agents is None else records[:n_agents])
    if n_agents is not None and len(chosen) < n_agents:
        raise ValueError(f"scenario has {len(records)} records, {n_agents} requested")
    for r in chosen:
        if (r.width, r.height) != (grid.width, grid.height):
            raise ValueError(f"record for a {r.width}x{r.height} map, map is {grid.width}x{grid.height}")
    return Instance(grid, tuple(r.start for r in chosen), tuple(r.goal for r in chosen), name)


def _envelope(start: Position, goal: Position) -> tuple[int, int, int, int]:
    # cells on some shortest path on an open grid: the bounding box
    return (min(start[0], goal[0]), max(start[0], goal[0]), min(start[1], goal[1]), max(start[1], goal[1]))


def _max_envelope_overlap(starts, goals, cells) -> int:
    # pairwise-intersecting boxes share a cell, so a clique of k overlapping
    # envelopes exists iff some cell lies in k of them
    boxes = [_envelope(s, g) for s, g in zip(starts, goals)]
    return max(
        sum(x0 <= x <= x1 and y0 <= y <= y1 for x0, x1, y0, y1 in boxes)
        for x, y in cells
    )


def gen_puzzle_instance(n_tiles: int, seed: int, bias: bool = True, max_tries: int = 100_000) -> Instance:
    """Partial sliding tile puzzle on the open 4x4 board as a MAPF instance.

    With ``bias`` the scene is resampled until at least ceil(n/2) agents have
    pairwise overlapping shortest-path envelopes, so conflicts are likely.
    """
    if not 1 <= n_tiles <= PUZZLE_SIZE * PUZZLE_SIZE - 1:
        raise ValueError("n_tiles must be in 1..15")
    grid = GridMap.open(PUZZLE_SIZE, PUZZLE_SIZE)
    cells = grid.cells
    rng = random.Random(seed)
    need = math.ceil(n_tiles / 2)
    for _ in range(max_tries):
        starts = tuple(rng.sample(cells, n_tiles))
        goals = tuple(rng.sample(cells, n_tiles))
        if not bias or _max_envelope_overlap(starts, goals, cells) >= need:
            return Instance(grid, starts, goals, f"puzzle-{n_tiles}-{seed}")
    raise RuntimeError("could not satisfy the conflict bias")  # pragma: no cover


def connected_components(grid: GridMap) -> list[list[Position]]:
    seen = set()
    comps = []
    for cell in grid.cells:
        if cell in seen:
            continue
        comp = [cell]
        seen.add(cell)
        frontier = deque([cell])
        while frontier:
            cur = frontier.popleft()
            for nxt in grid.neighbors[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    frontier.append(nxt)
        comps.append(sorted(comp, key=lambda p: (p[1], p[0])))
    comps.sort(key=len, reverse=True)
    return comps


def gen_random_scenario(grid: GridMap, n_agents: int, seed: int, name: str = "") -> Instance:
    """Distinct random starts and goals drawn from the largest component."""
    comp = connected_components(grid)[0]
    if len(comp) < 2 * n_agents:
        raise ValueError(f"largest component has {len(comp)} cells, need {2 * n_agents}")
    rng = random.Random(seed)
    picks = rng.sample(comp, 2 * n_agents)
    return Instance(grid, tuple(picks[:n_agents]), tuple(picks[n_agents:]), name or f"random-{n_agents}-{seed}")


def bottleneck_map(corridor_len: int, chamber_size: int) -> GridMap:
    width = 2 * chamber_size + corridor_len
    mid = chamber_size // 2
    rows = []
    for y in range(chamber_size):
        row = "." * chamber_size
        row += ("." if y == mid else "@") * corridor_len
        row += "." * chamber_size
        rows.append(row)
    return GridMap.from_rows(rows)


def make_bottleneck_scene(corridor_len: int, chamber_size: int) -> Instance:
    """Two square chambers joined by a one-cell-wide corridor; the agents start
    at the far walls and swap sides, so their shortest paths always collide."""
    if corridor_len < 1 or chamber_size < 2:
        raise ValueError("need corridor_len >= 1 and chamber_size >= 2")
    grid = bottleneck_map(corridor_len, chamber_size)
    mid = chamber_size // 2
    left, right = (0, mid), (grid.width - 1, mid)
    return Instance(grid, (left, right), (right, left), f"bottleneck-{corridor_len}-{chamber_size}")

"""Benchmark harness: run solver variants over instance sets and tabulate stats."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional, Sequence

import yaml

from .cbs import CBS, VARIANTS, NoSolution, SearchLimitReached, SolverConfig, solve
from .core import Instance, SearchStats, detect_conflicts
from .instances import (
    gen_puzzle_instance,
    gen_random_scenario,
    instance_from_scenario,
    make_bottleneck_scene,
    read_map,
    read_scenario,
)
from .lowlevel import NoPathError, plan_meta, plan_single

log = logging.getLogger(__name__)

OUT_DIR_ENV = "MACBS_OUT_DIR"
SOURCE_KINDS = ("puzzle", "random", "scenario", "bottleneck")
CSV_COLUMNS = (
    "instance", "variant", "B", "cost", "solved", "expanded", "expanded_weighted",
    "pops", "splits", "merges", "restarts", "time_s",
)
SOLVED, UNSOLVABLE, TIMEOUT = "yes", "no", "TIMEOUT"


class BenchSpecError(ValueError):
    pass


def parse_B(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        B = float(value)
    elif isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
        B = math.inf
    else:
        try:
            B = float(int(str(value)))
        except ValueError:
            raise BenchSpecError(f"bad B value {value!r}") from None
    if B < 1 or (not math.isinf(B) and B != int(B)):
        raise BenchSpecError(f"B must be a positive integer or inf, got {value!r}")
    return B


def format_B(B: float) -> str:
    return "inf" if math.isinf(B) else str(int(B))


@dataclass
class RunConfig:
    source: dict
    variants: list[str] = field(default_factory=lambda: [CBS])
    B_values: list[float] = field(default_factory=lambda: [math.inf])
    max_meta_size: int = 2
    seed: int = 0
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    format: str = "csv"
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.source.get("kind") not in SOURCE_KINDS:
            raise BenchSpecError(f"instance source must be one of {SOURCE_KINDS}")
        for v in self.variants:
            if v not in VARIANTS:
                raise BenchSpecError(f"unknown variant {v!r}")
        if not self.variants:
            raise BenchSpecError("no variants listed")
        if not self.B_values:
            raise BenchSpecError("B list is empty")
        if self.format not in ("csv", "md"):
            raise BenchSpecError("format is csv or md")
        for lim in (self.node_limit, self.time_limit):
            if lim is not None and lim <= 0:
                raise BenchSpecError("limits must be positive")

    def cells(self) -> list[tuple[str, float]]:
        """(variant, B) pairs; CBS ignores B and runs once."""
        out = []
        for v in self.variants:
            if v == CBS:
                out.append((v, math.inf))
            else:
                out.extend((v, B) for B in self.B_values)
        return out


def load_bench_spec(path) -> RunConfig:
    """Read a YAML bench spec.

    Example::

        instances:
          puzzle: {tiles: 6, count: 100, seed: 0}
        variants: [MA-CBS, MA-CBS/R]
        B: [1, 4, 16, inf]
        node_limit: 200000
    """
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    base = FsPath(path).parent
    sources = data.get("instances") or {}
    if not isinstance(sources, dict) or len(sources) != 1:
        raise BenchSpecError("exactly one instance source is required under 'instances'")
    kind, params = next(iter(sources.items()))
    params = dict(params or {})
    for key in ("map", "scen"):
        if key in params:
            vals = params[key] if isinstance(params[key], list) else [params[key]]
            vals = [str(base / v) for v in vals]
            params[key] = vals if isinstance(params[key], list) else vals[0]
    B_raw = data.get("B", ["inf"])
    if not isinstance(B_raw, list):
        B_raw = [B_raw]
    return RunConfig(
        source={"kind": kind, **params},
        variants=list(data.get("variants", [CBS])),
        B_values=[parse_B(b) for b in B_raw],
        max_meta_size=int(data.get("max_meta_size", 2)),
        seed=int(data.get("seed", 0)),
        node_limit=data.get("node_limit"),
        time_limit=data.get("time_limit"),
        format=data.get("format", "csv"),
        out=data.get("out"),
        workers=int(data.get("workers", 1)),
    )


def load_instances(source: dict) -> tuple[list[Instance], list[str]]:
    """Instances for a source description plus per-file error messages."""
    kind = source["kind"]
    errors: list[str] = []
    if kind == "puzzle":
        tiles, n, seed = int(source["tiles"]), int(source.get("count", 100)), int(source.get("seed", 0))
        return [gen_puzzle_instance(tiles, seed + i) for i in range(n)], errors
    if kind == "bottleneck":
        corridors = source.get("corridor", [1, 2, 3, 4, 5])
        chambers = source.get("chamber", [2, 3, 4, 5])
        corridors = corridors if isinstance(corridors, list) else [corridors]
        chambers = chambers if isinstance(chambers, list) else [chambers]
        return [make_bottleneck_scene(c, s) for s in chambers for c in corridors], errors
    if kind == "random":
        try:
            grid = read_map(source["map"])
        except (OSError, ValueError) as exc:
            return [], [f"{source['map']}: {exc}"]
        name = FsPath(source["map"]).stem
        n, agents, seed = int(source.get("count", 100)), int(source["agents"]), int(source.get("seed", 0))
        return [gen_random_scenario(grid, agents, seed + i, f"{name}-{seed + i}") for i in range(n)], errors
    # scenario files against one map
    try:
        grid = read_map(source["map"])
    except (OSError, ValueError) as exc:
        return [], [f"{source['map']}: {exc}"]
    scens = source["scen"] if isinstance(source["scen"], list) else [source["scen"]]
    agents = source.get("agents")
    instances = []
    for path in scens:
        try:
            records = read_scenario(path)
            instances.append(instance_from_scenario(
                grid, records, int(agents) if agents else None, FsPath(path).stem))
        except (OSError, ValueError) as exc:
            errors.append(f"{path}: {exc}")
    return instances, errors


@dataclass
class Row:
    instance: str
    variant: str
    B: float
    cost: Optional[int]
    status: str
    stats: SearchStats

    def values(self) -> list[str]:
        s = self.stats
        return [
            self.instance, self.variant, format_B(self.B),
            "" if self.cost is None else str(self.cost), self.status,
            str(s.expanded), str(s.expanded_weighted), str(s.highlevel_pops),
            str(s.splits), str(s.merges), str(s.restarts), f"{s.wall_time:.4f}",
        ]


@dataclass
class Aggregate:
    variant: str
    B: float
    attempted: int = 0
    solved: int = 0
    expanded: int = 0
    expanded_weighted: int = 0
    pops: int = 0
    splits: int = 0
    merges: int = 0
    restarts: int = 0
    time_s: float = 0.0
    expanded_all: int = 0  # includes the partial work of capped cells

    @property
    def coverage(self) -> float:
        return 100.0 * self.solved / self.attempted if self.attempted else 0.0


@dataclass
class RunReport:
    rows: list[Row]
    errors: list[str] = field(default_factory=list)

    def totals(self) -> list[Aggregate]:
        aggs: dict[tuple[str, float], Aggregate] = {}
        for r in self.rows:
            a = aggs.setdefault((r.variant, r.B), Aggregate(r.variant, r.B))
            a.attempted += 1
            a.expanded_all += r.stats.expanded
            if r.status != SOLVED:
                continue
            a.solved += 1
            a.expanded += r.stats.expanded
            a.expanded_weighted += r.stats.expanded_weighted
            a.pops += r.stats.highlevel_pops
            a.splits += r.stats.splits
            a.merges += r.stats.merges
            a.restarts += r.stats.restarts
            a.time_s += r.stats.wall_time
        order = {v: i for i, v in enumerate(VARIANTS)}
        return sorted(aggs.values(), key=lambda a: (order[a.variant], a.B))

    def total(self, variant: str, B: float) -> Aggregate:
        for a in self.totals():
            if a.variant == variant and a.B == B:
                return a
        raise KeyError((variant, B))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.values())
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| variant | B | time, sec | expanded | split | merge | reset | solved |",
            "|---|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for a in self.totals():
            lines.append(
                f"| {a.variant} | {format_B(a.B)} | {a.time_s:.4f} | {a.expanded} | {a.splits} "
                f"| {a.merges} | {a.restarts} | {a.solved}/{a.attempted} ({a.coverage:.1f}%) |"
            )
        lines += ["", "| " + " | ".join(CSV_COLUMNS) + " |", "|" + "---|" * len(CSV_COLUMNS)]
        for r in self.rows:
            lines.append("| " + " | ".join(r.values()) + " |")
        if self.errors:
            lines += ["", "Errors:", *(f"- {e}" for e in self.errors)]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_markdown()


def run_cell(instance: Instance, config: SolverConfig) -> Row:
    try:
        sol = solve(instance, config)
        return Row(instance.name, config.variant, config.B, sol.cost, SOLVED, sol.stats)
    except NoSolution as exc:
        return Row(instance.name, config.variant, config.B, None, UNSOLVABLE, exc.stats)
    except SearchLimitReached as exc:
        return Row(instance.name, config.variant, config.B, None, TIMEOUT, exc.stats)


def _run_cell_args(args):
    return run_cell(*args)


def run_instances(instances: Sequence[Instance], config: RunConfig) -> RunReport:
    jobs = []
    for idx, inst in enumerate(instances):
        if not inst.name:
            inst = Instance(inst.map, inst.starts, inst.goals, f"instance-{idx}")
        for variant, B in config.cells():
            jobs.append((inst, SolverConfig(
                variant=variant, B=B, max_meta_size=config.max_meta_size,
                rng_seed=config.seed, node_limit=config.node_limit, time_limit=config.time_limit,
            )))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_run_cell_args, jobs, chunksize=4))
    else:
        rows = [run_cell(*job) for job in jobs]
    return RunReport(rows)


def run_bench(config: RunConfig) -> RunReport:
    """Attempt every (instance, variant, B) cell once and write the report."""
    instances, errors = load_instances(config.source)
    for e in errors:
        log.error("skipping input: %s", e)
    report = run_instances(instances, config)
    report.errors = errors
    if config.out:
        out = FsPath(config.out)
        if not out.is_absolute() and os.environ.get(OUT_DIR_ENV):
            out = FsPath(os.environ[OUT_DIR_ENV]) / out
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.render(config.format))
    return report


def estimate_B(instances: Sequence[Instance]) -> int:
    """floor(T2 / T11) measured in low-level expansions.

    T11 is the expansions needed to plan both agents of a conflicting pair
    independently, T2 those needed to plan the pair jointly; both are averaged
    over every pair whose unconstrained paths collide.
    """
    t11 = t2 = 0
    pairs = 0
    for inst in instances:
        if inst.num_agents < 2:
            continue
        single = []
        paths = []
        for s, g in zip(inst.starts, inst.goals):
            st = SearchStats()
            paths.append(plan_single(inst.map, s, g, None, st))
            single.append(st.expanded)
        seen = set()
        for c in detect_conflicts(paths):
            pair = (c.a1, c.a2)
            if pair in seen:
                continue
            seen.add(pair)
            st = SearchStats()
            try:
                plan_meta(inst.map, pair, [inst.starts[a] for a in pair], [inst.goals[a] for a in pair], None, st)
            except NoPathError:
                continue
            t11 += single[c.a1] + single[c.a2]
            t2 += st.expanded
            pairs += 1
    if not pairs:
        log.warning("no conflicting agent pair in the sample; falling back to B = 1")
        return 1
    return max(1, math.floor(t2 / t11))

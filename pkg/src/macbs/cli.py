"""Command-line entry point: ``macbs solve|bench|gen|model``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path as FsPath

from . import bench, instances, model
from .cbs import VARIANTS, NoSolution, SearchLimitReached, SolverConfig, solve
from .lowlevel import true_distance

EXIT_OK, EXIT_UNSOLVABLE, EXIT_LIMIT, EXIT_INPUT = 0, 1, 2, 3


def _out_path(path: str) -> FsPath:
    p = FsPath(path)
    base = os.environ.get(bench.OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = FsPath(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _B_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        lo_i, hi_i = int(lo), int(hi if sep else lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise argparse.ArgumentTypeError("need 1 <= A <= B")
    return list(range(lo_i, hi_i + 1))


def cmd_solve(args) -> int:
    try:
        grid = instances.read_map(args.map)
        records = instances.read_scenario(args.scen)
        inst = instances.instance_from_scenario(grid, records, args.agents, FsPath(args.scen).stem)
        config = SolverConfig(
            variant=args.variant, B=bench.parse_B(args.B), max_meta_size=args.max_meta,
            rng_seed=args.seed, node_limit=args.node_limit, time_limit=args.time_limit,
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        sol = solve(inst, config)
    except NoSolution as exc:
        _print_stats("unsolvable", None, exc.stats)
        return EXIT_UNSOLVABLE
    except SearchLimitReached as exc:
        _print_stats("timeout", None, exc.stats)
        return EXIT_LIMIT
    _print_stats("solved", sol.cost, sol.stats)
    if args.paths:
        for i, p in enumerate(sol.paths):
            print(f"agent {i}: " + " ".join(f"({x},{y})" for x, y in p))
    return EXIT_OK


def _print_stats(status, cost, stats):
    print(f"status={status}")
    if cost is not None:
        print(f"cost={cost}")
    print(
        f"expanded={stats.expanded} expanded_weighted={stats.expanded_weighted} "
        f"pops={stats.highlevel_pops} splits={stats.splits} merges={stats.merges} "
        f"restarts={stats.restarts} time_s={stats.wall_time:.4f}"
    )


def cmd_bench(args) -> int:
    try:
        config = bench.load_bench_spec(args.spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format:
        config.format = args.format
    if args.out:
        config.out = args.out
    if args.workers:
        config.workers = args.workers
    report = bench.run_bench(config)
    if not config.out:
        sys.stdout.write(report.render(config.format))
    if report.errors and not report.rows:
        return EXIT_INPUT
    if any(r.status == bench.TIMEOUT for r in report.rows):
        return EXIT_LIMIT
    return EXIT_OK


def _write_instance(inst, out: str, with_map: bool) -> None:
    prefix = _out_path(out)
    if prefix.suffix in (".scen", ".map"):
        prefix = prefix.with_suffix("")
    map_name = prefix.name + ".map"
    if with_map:
        prefix.with_suffix(".map").write_text(instances.serialize_map(inst.map))
    lengths = [true_distance(inst.map, s, g) for s, g in zip(inst.starts, inst.goals)]
    records = instances.scenario_records(inst, map_name, lengths)
    prefix.with_suffix(".scen").write_text(instances.format_scenario(records))
    print(f"wrote {prefix.with_suffix('.scen')}")


def cmd_gen(args) -> int:
    try:
        if args.kind == "puzzle":
            inst = instances.gen_puzzle_instance(args.tiles, args.seed, bias=not args.no_bias)
            _write_instance(inst, args.out, with_map=True)
        elif args.kind == "bottleneck":
            inst = instances.make_bottleneck_scene(args.corridor, args.chamber)
            _write_instance(inst, args.out, with_map=True)
        else:
            grid = instances.read_map(args.map)
            inst = instances.gen_random_scenario(grid, args.agents, args.seed)
            prefix = _out_path(args.out).with_suffix("")
            lengths = [true_distance(grid, s, g) for s, g in zip(inst.starts, inst.goals)]
            records = instances.scenario_records(inst, FsPath(args.map).name, lengths)
            prefix.with_suffix(".scen").write_text(instances.format_scenario(records))
            print(f"wrote {prefix.with_suffix('.scen')}")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_model(args) -> int:
    try:
        rows = model.ratio_table(args.t11, args.t2, args.B_range)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cols = ("B", "restart", "no_restart", "randomized")
    fmt = lambda v: str(v) if isinstance(v, int) else f"{v:.6g}"
    if args.format == "csv":
        print(",".join(cols))
        for r in rows:
            print(",".join(fmt(r[c]) for c in cols))
    else:
        print("| " + " | ".join(cols) + " |")
        print("|" + "---:|" * len(cols))
        for r in rows:
            print("| " + " | ".join(fmt(r[c]) for c in cols) + " |")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macbs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario")
    p.add_argument("--map", required=True)
    p.add_argument("--scen", required=True)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--variant", choices=VARIANTS, default="CBS")
    p.add_argument("--B", default="inf")
    p.add_argument("--max-meta", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--paths", action="store_true", help="print the solution paths")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a bench spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "md"))
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate instances")
    gsub = p.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("puzzle")
    g.add_argument("--tiles", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-bias", action="store_true")
    g.add_argument("--out", required=True)
    g = gsub.add_parser("scenario")
    g.add_argument("--map", required=True)
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g = gsub.add_parser("bottleneck")
    g.add_argument("--corridor", type=int, required=True)
    g.add_argument("--chamber", type=int, required=True)
    g.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("model", help="competitive ratios of the rent-or-buy model")
    p.add_argument("--t11", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--B-range", type=_B_range, required=True, dest="B_range")
    p.add_argument("--format", choices=("csv", "md"), default="md")
    p.set_defaults(func=cmd_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

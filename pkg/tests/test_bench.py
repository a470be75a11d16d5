import csv
import io
import logging
import math

import pytest

from macbs import bench, cli
from macbs.bench import RunConfig, RunReport, estimate_B, load_bench_spec, run_bench, run_instances
from macbs.core import GridMap, Instance
from macbs.instances import make_bottleneck_scene


def strip_time(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_trivial_instances_no_splits():
    report = run_bench(RunConfig({"kind": "puzzle", "tiles": 1, "count": 10}))
    assert len(report.rows) == 10
    assert all(r.stats.splits == 0 and r.status == bench.SOLVED for r in report.rows)


def test_bottleneck_restart_no_worse():
    cfg = RunConfig({"kind": "bottleneck", "corridor": [2], "chamber": [3]},
                    variants=["MA-CBS", "MA-CBS/R"], B_values=[1, 2, 4])
    report = run_bench(cfg)
    for B in (2, 4):
        assert report.total("MA-CBS/R", B).expanded <= report.total("MA-CBS", B).expanded


def test_csv_markdown_agree():
    cfg = RunConfig({"kind": "bottleneck", "corridor": [1, 2], "chamber": [2]},
                    variants=["CBS", "MA-CBS/R"], B_values=[1, math.inf])
    report = run_bench(cfg)
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert tuple(rows[0]) == bench.CSV_COLUMNS
    md = report.to_markdown()
    for row in rows[1:]:
        assert "| " + " | ".join(row) + " |" in md
    # CBS once per instance, restarting variant once per B
    assert len(rows) - 1 == 2 * (1 + 2)


def test_totals_are_column_sums():
    insts = [make_bottleneck_scene(c, 3) for c in (1, 2, 3)]
    cfg = RunConfig({"kind": "bottleneck"}, variants=["MA-CBS"], B_values=[2], node_limit=300)
    report = run_instances(insts, cfg)
    agg = report.total("MA-CBS", 2)
    solved = [r for r in report.rows if r.status == bench.SOLVED]
    assert agg.expanded == sum(r.stats.expanded for r in solved)
    assert agg.splits == sum(r.stats.splits for r in solved)
    assert agg.solved == len(solved)
    assert agg.expanded_all == sum(r.stats.expanded for r in report.rows)


def test_timeout_rows_flagged():
    cfg = RunConfig({"kind": "bottleneck", "corridor": [5], "chamber": [5]}, node_limit=20)
    report = run_bench(cfg)
    assert [r.status for r in report.rows] == [bench.TIMEOUT]
    assert report.total("CBS", math.inf).solved == 0


def test_rerun_reproducible():
    cfg = RunConfig({"kind": "puzzle", "tiles": 4, "count": 5}, variants=["MA-CBS/R-randomized"], B_values=[3], seed=9)
    assert strip_time(run_bench(cfg).to_csv()) == strip_time(run_bench(cfg).to_csv())


def test_parse_B():
    assert math.isinf(bench.parse_B("inf"))
    assert bench.parse_B(4) == 4
    with pytest.raises(bench.BenchSpecError):
        bench.parse_B(0)
    with pytest.raises(bench.BenchSpecError):
        bench.parse_B("2.5")


def test_spec_file_and_bad_input(tmp_path):
    (tmp_path / "m.map").write_text("type octile\nheight 2\nwidth 3\nmap\n...\n...\n")
    (tmp_path / "good.scen").write_text("version 1\n0\tm.map\t3\t2\t0\t0\t2\t0\t2\n")
    (tmp_path / "bad.scen").write_text("version 1\nnot a record\n")
    spec = tmp_path / "spec.yaml"
    spec.write_text(
        "instances:\n  scenario: {map: m.map, scen: [good.scen, bad.scen, missing.scen]}\n"
        "variants: [CBS, MA-CBS]\nB: [1, inf]\nformat: md\n"
    )
    cfg = load_bench_spec(spec)
    report = run_bench(cfg)
    assert len(report.errors) == 2
    assert {r.instance for r in report.rows} == {"good"}
    assert len(report.rows) == 3


def test_spec_validation(tmp_path):
    spec = tmp_path / "s.yaml"
    spec.write_text("instances:\n  puzzle: {tiles: 2}\n  bottleneck: {}\n")
    with pytest.raises(bench.BenchSpecError):
        load_bench_spec(spec)
    with pytest.raises(bench.BenchSpecError):
        RunConfig({"kind": "puzzle"}, variants=["nope"])
    with pytest.raises(bench.BenchSpecError):
        RunConfig({"kind": "puzzle"}, B_values=[])


def test_workers_same_numbers():
    src = {"kind": "puzzle", "tiles": 3, "count": 4}
    one = run_bench(RunConfig(src, variants=["MA-CBS"], B_values=[1, 2]))
    two = run_bench(RunConfig(src, variants=["MA-CBS"], B_values=[1, 2], workers=2))
    assert strip_time(one.to_csv()) == strip_time(two.to_csv())


def test_estimate_B_fallback(caplog):
    single = Instance(GridMap.open(3, 3), ((0, 0),), ((2, 2),))
    with caplog.at_level(logging.WARNING):
        assert estimate_B([single]) == 1
    assert "falling back" in caplog.text


def test_estimate_B_bottleneck():
    B = estimate_B([make_bottleneck_scene(3, 5)])
    assert B >= 1


# CLI

def test_cli_model_table(capsys):
    assert cli.main(["model", "--t11", "1", "--t2", "5", "--B-range", "1..6"]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("| 5 |"))
    assert "| 1.8 |" in line


def test_cli_model_csv(capsys):
    assert cli.main(["model", "--t11", "1", "--t2", "3", "--B-range", "3", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "B,restart,no_restart,randomized"
    assert lines[1].startswith("3,1.66667,3.66667,")


def test_cli_gen_and_solve(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(bench.OUT_DIR_ENV, str(tmp_path))
    assert cli.main(["gen", "bottleneck", "--corridor", "2", "--chamber", "3", "--out", "bn"]) == 0
    assert (tmp_path / "bn.map").exists() and (tmp_path / "bn.scen").exists()
    capsys.readouterr()
    code = cli.main(["solve", "--map", str(tmp_path / "bn.map"), "--scen", str(tmp_path / "bn.scen"),
                     "--variant", "MA-CBS/R", "--B", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "status=solved" in out and "restarts=1" in out


def test_cli_gen_scenario(tmp_path, capsys):
    (tmp_path / "g.map").write_text("type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n")
    out = tmp_path / "s1.scen"
    assert cli.main(["gen", "scenario", "--map", str(tmp_path / "g.map"), "--agents", "2", "--seed", "4", "--out", str(out)]) == 0
    first = out.read_text()
    assert cli.main(["gen", "scenario", "--map", str(tmp_path / "g.map"), "--agents", "2", "--seed", "4", "--out", str(out)]) == 0
    assert out.read_text() == first


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["solve", "--map", str(tmp_path / "none.map"), "--scen", "x.scen"]) == cli.EXIT_INPUT
    assert cli.main(["frobnicate"]) == cli.EXIT_INPUT
    (tmp_path / "c.map").write_text("type octile\nheight 1\nwidth 2\nmap\n..\n")
    (tmp_path / "c.scen").write_text("version 1\n0\tc.map\t2\t1\t0\t0\t1\t0\t1\n0\tc.map\t2\t1\t1\t0\t0\t0\t1\n")
    args = ["solve", "--map", str(tmp_path / "c.map"), "--scen", str(tmp_path / "c.scen")]
    assert cli.main(args + ["--variant", "MA-CBS", "--B", "1"]) == cli.EXIT_UNSOLVABLE
    assert cli.main(args + ["--node-limit", "5"]) == cli.EXIT_LIMIT


def test_cli_bench_writes_out(tmp_path, monkeypatch, capsys):
    spec = tmp_path / "b.yaml"
    spec.write_text("instances:\n  bottleneck: {corridor: [1], chamber: [2]}\nvariants: [CBS]\n")
    monkeypatch.setenv(bench.OUT_DIR_ENV, str(tmp_path / "out"))
    assert cli.main(["bench", "--spec", str(spec), "--out", "r.md", "--format", "md"]) == 0
    text = (tmp_path / "out" / "r.md").read_text()
    assert text.startswith("| variant | B |")

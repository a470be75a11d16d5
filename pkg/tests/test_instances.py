import random

import pytest

from macbs.cbs import CBS, MA_CBS_R, SolverConfig, solve
from macbs.core import GridMap, Instance, sic, validate_solution
from macbs.instances import (
    MapParseError,
    ScenarioParseError,
    ScenarioRecord,
    bottleneck_map,
    connected_components,
    format_scenario,
    gen_puzzle_instance,
    gen_random_scenario,
    instance_from_scenario,
    make_bottleneck_scene,
    parse_map,
    parse_scenario,
    scenario_records,
    serialize_map,
)
from macbs.lowlevel import plan_single, true_distance

from map_goldens import MALFORMED, MAP_DIR, VALID, check_goldens, rows_of
from oracles import joint_optimum, prioritized_plan


@pytest.mark.parametrize("name", sorted(VALID) + sorted(MALFORMED))
def test_map_goldens(name):
    results = {n: (ok, detail) for n, ok, detail in check_goldens(parse_map, MapParseError)}
    ok, detail = results[name]
    assert ok, detail


def test_small_map_cells():
    g = parse_map((MAP_DIR / "small.map").read_text())
    assert g.num_cells == 3
    assert not g.is_passable((1, 0))


def test_tree_glyph_blocked():
    g = parse_map("type octile\nheight 1\nwidth 2\nmap\nT.\n")
    assert rows_of(g) == ["#."]


def test_map_round_trip():
    rng = random.Random(1)
    for _ in range(20):
        w, h = rng.randint(1, 9), rng.randint(1, 9)
        cells = tuple(rng.random() < 0.7 for _ in range(w * h))
        if not any(cells):
            continue
        grid = GridMap(w, h, cells)
        assert parse_map(serialize_map(grid)) == grid


def test_scenario_round_trip():
    recs = [
        ScenarioRecord("a.map", (0, 1), (3, 2), 4, 3, 0, 4),
        ScenarioRecord("a.map", (2, 2), (0, 0), 4, 3, 1, 4.5),
    ]
    assert parse_scenario(format_scenario(recs)) == recs


def test_scenario_without_version_and_spaces():
    text = "0 m.map 3 2 0 0 2 1 3\n"
    (rec,) = parse_scenario(text)
    assert (rec.start, rec.goal, rec.optimal_length) == ((0, 0), (2, 1), 3)


def test_scenario_errors():
    with pytest.raises(ScenarioParseError):
        parse_scenario("version 1\n0\tm.map\t3\t2\t0\t0\n")
    with pytest.raises(ScenarioParseError):
        parse_scenario("version 1\n0\tm.map\t3\t2\t5\t0\t1\t1\t1\n")
    grid = GridMap.open(3, 3)
    recs = [ScenarioRecord("m.map", (0, 0), (1, 1), 4, 4)]
    with pytest.raises(ValueError):
        instance_from_scenario(grid, recs)
    with pytest.raises(ValueError):
        instance_from_scenario(grid, [ScenarioRecord("m.map", (0, 0), (1, 1), 3, 3)], n_agents=2)


def test_scenario_records_to_instance():
    inst = make_bottleneck_scene(2, 3)
    lengths = [true_distance(inst.map, s, g) for s, g in zip(inst.starts, inst.goals)]
    recs = scenario_records(inst, "bn.map", lengths)
    back = instance_from_scenario(inst.map, parse_scenario(format_scenario(recs)))
    assert (back.starts, back.goals) == (inst.starts, inst.goals)


def test_puzzle_single_tile():
    inst = gen_puzzle_instance(1, 3)
    assert inst.num_agents == 1
    sol = solve(inst)
    assert sol.stats.splits == 0


def test_puzzle_deterministic():
    assert gen_puzzle_instance(6, 42) == gen_puzzle_instance(6, 42)
    assert gen_puzzle_instance(6, 42) != gen_puzzle_instance(6, 43)


def test_puzzle_bounds():
    with pytest.raises(ValueError):
        gen_puzzle_instance(0, 1)
    with pytest.raises(ValueError):
        gen_puzzle_instance(16, 1)


def test_nine_tile_puzzles_solvable():
    # a valid plan from the prioritized oracle certifies solvability; optimal
    # search on nine agents is benchmark territory, not a unit test
    for seed in range(100):
        inst = gen_puzzle_instance(9, seed)
        assert inst.num_agents == 9
        plan = prioritized_plan(inst, random.Random(seed))
        assert plan is not None and validate_solution(inst, plan), seed


@pytest.mark.slow
def test_nine_tile_optimum_below_prioritized():
    for seed in (15, 17, 20, 31):
        inst = gen_puzzle_instance(9, seed)
        plan = prioritized_plan(inst, random.Random(seed))
        sol = solve(inst, SolverConfig(MA_CBS_R, B=1, node_limit=300_000))
        assert validate_solution(inst, sol.paths)
        assert sol.cost <= sic(plan, inst)


def test_random_scenario():
    grid = GridMap.from_rows(["....@", ".@@.@", "....@", "@@@@."])
    inst = gen_random_scenario(grid, 3, 5)
    comp = set(connected_components(grid)[0])
    assert set(inst.starts + inst.goals) <= comp
    assert len(set(inst.starts + inst.goals)) == 6
    assert gen_random_scenario(grid, 3, 5) == inst
    with pytest.raises(ValueError):
        gen_random_scenario(grid, 6, 0)


def test_random_scenario_one_agent_plannable():
    grid = parse_map((MAP_DIR / "glyphs.map").read_text())
    inst = gen_random_scenario(grid, 1, 2)
    path = plan_single(grid, inst.starts[0], inst.goals[0])
    assert path[-1] == inst.goals[0]


def test_random_scenario_bytes_stable():
    grid = GridMap.open(6, 6)
    a = format_scenario(scenario_records(gen_random_scenario(grid, 4, 8), "g.map"))
    b = format_scenario(scenario_records(gen_random_scenario(grid, 4, 8), "g.map"))
    assert a == b


def test_bottleneck_shape():
    grid = bottleneck_map(3, 3)
    assert (grid.width, grid.height) == (9, 3)
    assert rows_of(grid) == ["...###...", ".........", "...###..."]
    with pytest.raises(ValueError):
        make_bottleneck_scene(0, 3)
    with pytest.raises(ValueError):
        make_bottleneck_scene(1, 1)


def test_bottleneck_conflicts():
    sol = solve(make_bottleneck_scene(1, 2), SolverConfig(CBS))
    assert sol.stats.splits >= 1


def test_bottleneck_cost_grows_with_corridor():
    costs = [joint_optimum(make_bottleneck_scene(c, 3)) for c in (1, 2, 3, 4)]
    assert all(a < b for a, b in zip(costs, costs[1:]))
    for c, want in zip((1, 2, 3, 4), costs):
        assert solve(make_bottleneck_scene(c, 3), SolverConfig(MA_CBS_R, B=1)).cost == want

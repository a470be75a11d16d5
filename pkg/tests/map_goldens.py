"""Expected parse results for the hand-written maps under fixtures/maps."""
from pathlib import Path

MAP_DIR = Path(__file__).parent / "fixtures" / "maps"

# name -> (width, height, rows of passability as '.'/'#')
VALID = {
    "small.map": (2, 2, [".#", ".."]),
    "glyphs.map": (4, 2, ["...#", "###."]),
    "swapped_dims.map": (3, 1, ["#.#"]),
    "crlf.map": (2, 1, [".."]),
    "trailing_blank.map": (3, 1, ["..."]),
}

# name -> line number the error must point at
MALFORMED = {
    "bad_type.map": 1,
    "bad_height.map": 2,
    "zero_height.map": 2,
    "missing_width.map": 3,
    "bad_map_line.map": 4,
    "long_row.map": 5,
    "short_row.map": 6,
    "bad_glyph.map": 6,
    "extra_rows.map": 6,
    "missing_rows.map": 7,
    "no_passable.map": 5,
}


def rows_of(grid):
    return [
        "".join("." if grid.passable[y * grid.width + x] else "#" for x in range(grid.width))
        for y in range(grid.height)
    ]


def check_goldens(parse, error_type):
    """Yield (name, ok, detail) for every fixture."""
    for name, (w, h, rows) in VALID.items():
        try:
            g = parse((MAP_DIR / name).read_text())
            ok = (g.width, g.height, rows_of(g)) == (w, h, rows)
            yield name, ok, "" if ok else f"got {g.width}x{g.height} {rows_of(g)}"
        except error_type as exc:
            yield name, False, str(exc)
    for name, line in MALFORMED.items():
        try:
            parse((MAP_DIR / name).read_text())
            yield name, False, "parsed without error"
        except error_type as exc:
            yield name, exc.line == line, str(exc)

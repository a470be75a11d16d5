"""Collects one summary line per acceptance criterion."""
LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str = "") -> str:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    LINES.append(line)
    print(line)
    return line

"""ASCII snapshots: height digits with robots drawn as letters A..Z."""
from __future__ import annotations

from typing import Dict, Mapping, Tuple

from .structure import OUTSIDE, StructureSpec


def robot_letter(robot: int) -> str:
    return chr(ord("A") + (robot - 1) % 26)


def render_snapshot(spec: StructureSpec, heights: Mapping[Tuple[int, int], int],
                    positions: Mapping[int, Tuple[int, int]]) -> str:
    at: Dict[Tuple[int, int], int] = {p: r for r, p in positions.items() if p != OUTSIDE}
    rows = []
    for y in range(1, spec.height + 1):
        cells = []
        for x in range(1, spec.width + 1):
            h = heights.get((x, y), 0)
            mark = robot_letter(at[(x, y)]) if (x, y) in at else " "
            cells.append(f"{h}{mark}")
        rows.append(" ".join(cells).rstrip())
    outside = [robot_letter(r) for r, p in sorted(positions.items()) if p == OUTSIDE]
    rows.append("outside: " + (" ".join(outside) if outside else "-"))
    return "\n".join(rows) + "\n"

"""Direct (non-automaton) statements of the placement rules, for audits.

These work on plain height maps and deliberately share no code with the
guard builders in :mod:`brickbot.structure`.
"""
from __future__ import annotations

from typing import Mapping, Tuple

Cell = Tuple[int, int]


def _h(heights: Mapping[Cell, int], cell: Cell) -> int:
    return heights.get(cell, 0)


def no_trench(heights: Mapping[Cell, int], cell: Cell) -> bool:
    """E1: the cell is not strictly lower than both neighbours on an axis."""
    x, y = cell
    h = _h(heights, cell)
    if h < _h(heights, (x - 1, y)) and h < _h(heights, (x + 1, y)):
        return False
    if h < _h(heights, (x, y - 1)) and h < _h(heights, (x, y + 1)):
        return False
    return True


def has_level_neighbor(heights: Mapping[Cell, int], cell: Cell, width: int, height: int,
                       io) -> bool:
    x, y = cell
    h = _h(heights, cell)
    for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
        if 1 <= nx <= width and 1 <= ny <= height and _h(heights, (nx, ny)) == h:
            return True
    return cell in io and h == 0


def placement_allowed(heights: Mapping[Cell, int], cell: Cell, spec) -> bool:
    """All three brick-addition conditions for the given structure spec."""
    return (has_level_neighbor(heights, cell, spec.width, spec.height, spec.io)
            and no_trench(heights, cell)
            and _h(heights, cell) < spec.target.get(cell, 0))

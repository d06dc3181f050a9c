"""Event alphabet shared by structure, robot and supervisor automata.

Text syntax (used by every file format in the package)::

    tau[3](x,y)      unload by robot 3 (owner's own event, pre-refinement)
    tau[o](x,y)      unload by some other robot
    tau[j=3](x,y)    unload by robot 3 as seen after refinement
    loc[3]:e         local event of robot 3 (e, w, n, s, p, out, in(x,y))
"""
from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .errors import ParseError

Cell = Tuple[int, int]

LOCAL_KINDS = ("e", "w", "n", "s", "p", "out", "in")
MOVES = {"e": (1, 0), "w": (-1, 0), "n": (0, -1), "s": (0, 1)}

SELF = "self"
OTHER = "other"
INDEXED = "indexed"


@dataclass(frozen=True)
class Local:
    robot: int
    kind: str
    cell: Optional[Cell] = None  # only for kind == "in"

    def __str__(self):
        if self.kind == "in":
            return f"loc[{self.robot}]:in({self.cell[0]},{self.cell[1]})"
        return f"loc[{self.robot}]:{self.kind}"


@dataclass(frozen=True)
class Unload:
    owner: str
    cell: Cell
    robot: Optional[int] = None  # None iff owner == OTHER

    def __str__(self):
        x, y = self.cell
        if self.owner == OTHER:
            return f"tau[o]({x},{y})"
        if self.owner == INDEXED:
            return f"tau[j={self.robot}]({x},{y})"
        return f"tau[{self.robot}]({x},{y})"


Event = Union[Local, Unload]


def tau_self(robot: int, cell: Cell) -> Unload:
    return Unload(SELF, tuple(cell), robot)


def tau_other(cell: Cell) -> Unload:
    return Unload(OTHER, tuple(cell))


def tau_indexed(robot: int, cell: Cell) -> Unload:
    return Unload(INDEXED, tuple(cell), robot)


def is_task(event) -> bool:
    return isinstance(event, Unload)


def is_local(event) -> bool:
    return isinstance(event, Local)


@lru_cache(maxsize=None)
def event_key(event) -> str:
    """Sort key giving a stable, human-readable order."""
    return str(event)


_TAU = re.compile(r"^tau\[(o|j=\d+|\d+)\]\((\d+),(\d+)\)$")
_LOC = re.compile(r"^loc\[(\d+)\]:(e|w|n|s|p|out|in\((\d+),(\d+)\))$")


def parse_event(text: str):
    text = text.strip()
    m = _TAU.match(text)
    if m:
        who, x, y = m.group(1), int(m.group(2)), int(m.group(3))
        if who == "o":
            return tau_other((x, y))
        if who.startswith("j="):
            return tau_indexed(int(who[2:]), (x, y))
        return tau_self(int(who), (x, y))
    m = _LOC.match(text)
    if m:
        robot = int(m.group(1))
        if m.group(3) is not None:
            return Local(robot, "in", (int(m.group(3)), int(m.group(4))))
        return Local(robot, m.group(2))
    raise ParseError(f"bad event syntax {text!r}")

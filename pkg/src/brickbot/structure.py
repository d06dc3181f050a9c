"""Target structures and the structure automaton (brick-addition physics + target heights).

Structure file format::

    # comment
    grid <n_x> <n_y>
    io <x,y> <x,y> ...
    heights
    <n_x integers>      # row y = 1
    ...                 # n_y rows in total
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

from .efa import (DEFAULT_STATE_CAP, ExtendedAutomaton, Transition, VariableTable, compose,
                  flatten, increment)
from .errors import ModelError, ParseError
from .events import Cell, tau_other, tau_self
from .explicit import ExplicitAutomaton, trim
from .guards import Const, Var, conj, disj, eq, lt, neg

OUTSIDE: Cell = (0, 0)


class UnreachableTargetError(ModelError):
    pass


@dataclass(frozen=True)
class StructureSpec:
    width: int
    height: int
    target: Mapping[Cell, int]
    io: Tuple[Cell, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ModelError("grid dimensions must be positive")
        object.__setattr__(self, "target", dict(self.target))
        object.__setattr__(self, "io", tuple(sorted(set(map(tuple, self.io)), key=_yx)))
        for cell in self.cells:
            h = self.target.get(cell, 0)
            if h < 0:
                raise ModelError(f"negative target height at {cell}")
            self.target[cell] = h
        for cell in self.target:
            if not self.in_domain(cell):
                raise ModelError(f"target cell {cell} outside domain")
        if not self.io:
            raise ModelError("io set must be nonempty")
        for cell in self.io:
            if not self.in_domain(cell):
                raise ModelError(f"io cell {cell} outside domain")

    def __hash__(self):
        return hash((self.width, self.height, tuple(sorted(self.target.items())), self.io))

    @property
    def cells(self) -> List[Cell]:
        """Domain cells ordered by (y, x)."""
        return [(x, y) for y in range(1, self.height + 1) for x in range(1, self.width + 1)]

    @property
    def task_cells(self) -> List[Cell]:
        """Cells with target height >= 1, ordered by (y, x)."""
        return [c for c in self.cells if self.target[c] >= 1]

    def in_domain(self, cell: Cell) -> bool:
        x, y = cell
        return 1 <= x <= self.width and 1 <= y <= self.height

    def neighbors(self, cell: Cell) -> List[Cell]:
        """N_{x,y}: in-domain 4-neighbours, plus the outside region for io cells."""
        if cell == OUTSIDE:
            return list(self.io)
        x, y = cell
        out = [c for c in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)) if self.in_domain(c)]
        if cell in self.io:
            out.append(OUTSIDE)
        return out

    def neighbor_table(self) -> Dict[Cell, Tuple[Cell, ...]]:
        table = {c: tuple(self.neighbors(c)) for c in self.cells}
        table[OUTSIDE] = tuple(self.io)
        return table

    @property
    def total_bricks(self) -> int:
        return sum(self.target.values())

    def to_text(self) -> str:
        lines = [f"grid {self.width} {self.height}",
                 "io " + " ".join(f"{x},{y}" for x, y in self.io),
                 "heights"]
        for y in range(1, self.height + 1):
            lines.append(" ".join(str(self.target[(x, y)]) for x in range(1, self.width + 1)))
        return "\n".join(lines) + "\n"


def _yx(cell):
    return cell[1], cell[0]


def parse_structure(text: str) -> StructureSpec:
    rows: List[Tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line))
    if len(rows) < 3:
        raise ParseError("expected 'grid', 'io' and 'heights' lines", rows[-1][0] if rows else None)

    lineno, line = rows[0]
    parts = line.split()
    if len(parts) != 3 or parts[0] != "grid":
        raise ParseError("expected 'grid <n_x> <n_y>'", lineno)
    try:
        nx, ny = int(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError("grid dimensions must be integers", lineno) from None
    if nx < 1 or ny < 1:
        raise ParseError("grid dimensions must be positive", lineno)

    lineno, line = rows[1]
    parts = line.split()
    if parts[0] != "io" or len(parts) < 2:
        raise ParseError("expected 'io <x,y> ...' with at least one cell", lineno)
    io = []
    for tok in parts[1:]:
        try:
            x, y = (int(v) for v in tok.split(","))
        except ValueError:
            raise ParseError(f"bad io cell {tok!r}", lineno) from None
        if not (1 <= x <= nx and 1 <= y <= ny):
            raise ParseError(f"io cell outside domain: ({x},{y})", lineno)
        io.append((x, y))

    lineno, line = rows[2]
    if line != "heights":
        raise ParseError("expected 'heights'", lineno)
    body = rows[3:]
    if len(body) != ny:
        where = body[ny][0] if len(body) > ny else (body[-1][0] if body else lineno)
        raise ParseError(f"expected {ny} height rows, found {len(body)}", where)
    target = {}
    for y, (lineno, line) in enumerate(body, 1):
        vals = line.split()
        if len(vals) != nx:
            raise ParseError(f"height row has {len(vals)} entries, expected {nx}", lineno)
        for x, tok in enumerate(vals, 1):
            if not tok.isdigit():
                raise ParseError(f"bad height {tok!r}", lineno)
            target[(x, y)] = int(tok)
    return StructureSpec(nx, ny, target, tuple(io))


# -- variables ---------------------------------------------------------------


def hvar(cell: Cell) -> str:
    return f"h({cell[0]},{cell[1]})"


def structure_table(spec: StructureSpec) -> VariableTable:
    table = VariableTable()
    declare_heights(spec, table)
    return table


def declare_heights(spec: StructureSpec, table: VariableTable) -> None:
    for cell in spec.task_cells:
        table.declare(hvar(cell), 0, spec.target[cell], 0)


def height_term(spec: StructureSpec, cell: Cell):
    """Height of *cell* as a guard term; constant 0 where no brick can ever be."""
    if spec.in_domain(cell) and spec.target[cell] >= 1:
        return Var(hvar(cell))
    return Const(0)


def _require_heights(spec, table):
    for cell in spec.task_cells:
        if hvar(cell) not in table or table.domain(hvar(cell)) != (0, spec.target[cell]):
            raise ModelError(f"table must declare {hvar(cell)} with domain 0..{spec.target[cell]}")


# -- guards ------------------------------------------------------------------


def guard_level_neighbor(spec: StructureSpec, cell: Cell):
    """Some neighbour (outside region included) is level with *cell*."""
    h = height_term(spec, cell)
    return disj(*(eq(height_term(spec, n), h) for n in spec.neighbors(cell)))


def guard_no_trench(spec: StructureSpec, cell: Cell):
    """Not strictly below both neighbours on either axis; off-grid counts as 0."""
    x, y = cell
    h = height_term(spec, cell)
    return conj(
        neg(conj(lt(h, height_term(spec, (x - 1, y))), lt(h, height_term(spec, (x + 1, y))))),
        neg(conj(lt(h, height_term(spec, (x, y - 1))), lt(h, height_term(spec, (x, y + 1))))),
    )


# -- component automata ------------------------------------------------------


def build_g1(spec: StructureSpec, table: VariableTable, robot: int = 1) -> ExtendedAutomaton:
    _require_heights(spec, table)
    transitions = []
    events = []
    for cell in spec.task_cells:
        guard = conj(guard_level_neighbor(spec, cell), guard_no_trench(spec, cell))
        for ev in (tau_self(robot, cell), tau_other(cell)):
            events.append(ev)
            transitions.append(Transition("g1", ev, guard, (increment(hvar(cell)),), "g1"))
    return ExtendedAutomaton("G1", table, ["g1"], "g1", ["g1"], transitions, events)


def build_g2_cell(spec: StructureSpec, table: VariableTable, cell: Cell,
                  robot: int = 1) -> ExtendedAutomaton:
    h = Var(hvar(cell))
    top = spec.target[cell] - 1
    below, last = lt(h, top), eq(h, top)
    transitions = []
    evs = (tau_self(robot, cell), tau_other(cell))
    for ev in evs:
        transitions.append(Transition("open", ev, below, (), "open"))
        transitions.append(Transition("open", ev, last, (), "full"))
    return ExtendedAutomaton(f"G2{cell}", table, ["open", "full"], "open", ["full"],
                             transitions, evs)


def build_g2(spec: StructureSpec, table: VariableTable, robot: int = 1):
    _require_heights(spec, table)
    cells = [build_g2_cell(spec, table, c, robot) for c in spec.task_cells]
    if not cells:
        return ExtendedAutomaton("G2", table, ["full"], "full", ["full"], [], ())
    return compose(cells, name="G2")


def structure_components(spec: StructureSpec, table: VariableTable, robot: int = 1):
    g2 = build_g2(spec, table, robot)
    return [build_g1(spec, table, robot), *g2.components]


def build_structure_automaton(spec: StructureSpec, robot: int = 1,
                              state_cap: int = DEFAULT_STATE_CAP) -> ExplicitAutomaton:
    """Reachable, co-accessible structure states with both unload labels per edge."""
    table = structure_table(spec)
    raw = flatten(compose(structure_components(spec, table, robot), name="T"), state_cap)
    t = trim(raw)
    if t.is_empty:
        raise UnreachableTargetError("target structure unreachable under E1")
    return t


def heights_of(f: ExplicitAutomaton, state: int, spec: StructureSpec) -> Dict[Cell, int]:
    """Full height map (zeros included) recorded in a state's valuation."""
    label = f.label(state)
    return {c: label.get(hvar(c), 0) for c in spec.cells}

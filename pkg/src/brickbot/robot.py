"""Generic construction-robot model: navigation, load, climbing and placement rules."""
from __future__ import annotations

from typing import List

from .efa import (ExtendedAutomaton, Transition, VariableTable, assign_const, compose,
                  increment)
from .events import Local, tau_self
from .guards import TRUE, Var, abs_le, conj, disj, eq, gt, le, lt
from .structure import OUTSIDE, StructureSpec, height_term, structure_table


def xvar(robot: int) -> str:
    return f"xpos[{robot}]"


def yvar(robot: int) -> str:
    return f"ypos[{robot}]"


def declare_position(spec: StructureSpec, robot: int, table: VariableTable) -> None:
    table.declare(xvar(robot), 0, spec.width, 0)
    table.declare(yvar(robot), 0, spec.height, 0)


def local_alphabet(spec: StructureSpec, robot: int) -> List[Local]:
    events = [Local(robot, k) for k in ("e", "w", "n", "s", "p", "out")]
    events += [Local(robot, "in", c) for c in spec.io]
    return events


def task_alphabet(spec: StructureSpec, robot: int):
    return [tau_self(robot, c) for c in spec.task_cells]


def _at(robot, cell):
    return conj(eq(Var(xvar(robot)), cell[0]), eq(Var(yvar(robot)), cell[1]))


def build_g3(spec: StructureSpec, robot: int, table: VariableTable) -> ExtendedAutomaton:
    """Outside/inside navigation with grid-boundary guards and position updates."""
    x, y = Var(xvar(robot)), Var(yvar(robot))
    ev = lambda k, c=None: Local(robot, k, c)  # noqa: E731
    ts = [Transition("q0", ev("p"), TRUE, (), "q0")]
    for cell in spec.io:
        ts.append(Transition("q0", ev("in", cell), TRUE,
                             (assign_const(xvar(robot), cell[0]), assign_const(yvar(robot), cell[1])),
                             "q1"))
    ts.append(Transition("q1", ev("out"), TRUE,
                         (assign_const(xvar(robot), 0), assign_const(yvar(robot), 0)), "q0"))
    ts += [
        Transition("q1", ev("e"), lt(x, spec.width), (increment(xvar(robot)),), "q1"),
        Transition("q1", ev("w"), gt(x, 1), (increment(xvar(robot), -1),), "q1"),
        Transition("q1", ev("s"), lt(y, spec.height), (increment(yvar(robot)),), "q1"),
        Transition("q1", ev("n"), gt(y, 1), (increment(yvar(robot), -1),), "q1"),
    ]
    return ExtendedAutomaton(f"G3[{robot}]", table, ["q0", "q1"], "q0", ["q0"], ts)


def build_g4(spec: StructureSpec, robot: int, table: VariableTable) -> ExtendedAutomaton:
    """Pick one brick, then unload it before picking again."""
    ts = [Transition("unloaded", Local(robot, "p"), TRUE, (), "loaded")]
    ts += [Transition("loaded", e, TRUE, (), "unloaded") for e in task_alphabet(spec, robot)]
    return ExtendedAutomaton(f"G4[{robot}]", table, ["unloaded", "loaded"], "unloaded",
                             ["unloaded", "loaded"], ts)


_SHIFT = {"e": (1, 0), "w": (-1, 0), "s": (0, 1), "n": (0, -1)}


def build_g5_g6(spec: StructureSpec, robot: int, table: VariableTable) -> ExtendedAutomaton:
    """Climbing limit of one brick on every move, entry and exit."""
    ts = []
    for kind, (dx, dy) in _SHIFT.items():
        options = []
        for cell in spec.cells:
            dest = (cell[0] + dx, cell[1] + dy)
            if spec.in_domain(dest):
                options.append(conj(_at(robot, cell),
                                    abs_le(height_term(spec, cell), height_term(spec, dest), 1)))
        ts.append(Transition("c", Local(robot, kind), disj(*options), (), "c"))
    origin = _at(robot, OUTSIDE)
    for cell in spec.io:
        ts.append(Transition("c", Local(robot, "in", cell),
                             conj(origin, le(height_term(spec, cell), 1)), (), "c"))
    exits = [conj(_at(robot, cell), le(height_term(spec, cell), 1)) for cell in spec.io]
    ts.append(Transition("c", Local(robot, "out"), disj(*exits), (), "c"))
    return ExtendedAutomaton(f"G56[{robot}]", table, ["c"], "c", ["c"], ts)


def build_g7(spec: StructureSpec, robot: int, table: VariableTable) -> ExtendedAutomaton:
    """Unload only onto a neighbouring cell level with the robot's own cell."""
    ts = []
    for cell in spec.task_cells:
        h = height_term(spec, cell)
        options = [conj(_at(robot, n), eq(height_term(spec, n), h)) for n in spec.neighbors(cell)]
        ts.append(Transition("u", tau_self(robot, cell), disj(*options), (), "u"))
    return ExtendedAutomaton(f"G7[{robot}]", table, ["u"], "u", ["u"], ts)


def robot_components(spec: StructureSpec, robot: int, table: VariableTable):
    return [build_g3(spec, robot, table), build_g4(spec, robot, table),
            build_g5_g6(spec, robot, table), build_g7(spec, robot, table)]


def build_robot(spec: StructureSpec, robot: int = 1, table: VariableTable = None):
    """Robot model over its own position variables and the shared heights.

    When *table* is None a fresh table with heights and this robot's
    position is created.
    """
    if table is None:
        table = structure_table(spec)
    if xvar(robot) not in table:
        declare_position(spec, robot, table)
    return compose(robot_components(spec, robot, table), name=f"R[{robot}]")

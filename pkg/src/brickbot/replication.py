"""Copy a supervisor to another robot and refine it for an explicit robot set."""
from __future__ import annotations

from typing import Iterable

from .events import INDEXED, OTHER, SELF, Local, Unload, tau_indexed, tau_other, tau_self
from .explicit import ExplicitAutomaton
from .robot import xvar, yvar
from .synthesis import Supervisor


def _rename_var(name: str, old: int, new: int) -> str:
    if name in (xvar(old), yvar(old)):
        return name.replace(f"[{old}]", f"[{new}]")
    return name


def replicate(sup: Supervisor, j: int) -> Supervisor:
    """Supervisor for robot *j*: same automaton with robot indices substituted."""
    i = sup.robot
    if i == j:
        return sup

    def swap(e):
        if isinstance(e, Local) and e.robot == i:
            return (Local(j, e.kind, e.cell),)
        if isinstance(e, Unload) and e.owner == SELF and e.robot == i:
            return (tau_self(j, e.cell),)
        return (e,)

    a = sup.automaton
    renamed = a.relabel(swap, var_names=tuple(_rename_var(n, i, j) for n in a.var_names))
    return Supervisor(renamed, j, dict(sup.certificate), sup.passes)


def refine(sup: Supervisor, robots: Iterable[int]) -> ExplicitAutomaton:
    """Expand ``tau[o]`` into one indexed unload per other robot.

    The owner's own unload becomes ``tau[j=i]`` as well, so refined
    supervisors of different robots synchronise on identical labels.
    """
    i = sup.robot
    robots = sorted(set(robots))
    if i not in robots:
        raise ValueError(f"robot {i} not in robot set {robots}")
    others = [j for j in robots if j != i]

    def expand(e):
        if isinstance(e, Unload):
            if e.owner == OTHER:
                return tuple(tau_indexed(j, e.cell) for j in others)
            if e.owner == SELF:
                return (tau_indexed(e.robot, e.cell),)
        return (e,)

    return sup.automaton.relabel(expand)


def unrefine(event, robot: int):
    """Inverse view of :func:`refine` for one label, from *robot*'s perspective."""
    if isinstance(event, Unload) and event.owner == INDEXED:
        return tau_self(robot, event.cell) if event.robot == robot else tau_other(event.cell)
    return event

"""Supervisor synthesis: prune the plant until it is trim, task-observer and totally reciprocal."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

from .efa import DEFAULT_STATE_CAP, VariableTable, compose, flatten
from .errors import DivergenceError, ParseError
from .events import SELF, Unload, event_key, is_local, is_task
from .explicit import ExplicitAutomaton, _parse_lines, is_nonblocking, to_text, trim
from .robot import declare_position, robot_components
from .structure import StructureSpec, declare_heights, structure_components

log = logging.getLogger(__name__)

DEFAULT_MAX_PASSES = 10_000
REPAIR_MODES = ("states", "transitions")


@dataclass(frozen=True)
class Macrostate:
    key: Tuple[int, ...]
    members: FrozenSet[int]


@dataclass(frozen=True)
class ObserverViolation:
    key: Tuple[int, ...]
    event: object
    states: FrozenSet[int]


@dataclass(frozen=True)
class ReciprocityViolation:
    key: Tuple[int, ...]
    cell: Tuple[int, int]


@dataclass
class Plant:
    spec: StructureSpec
    robot: int
    automaton: ExplicitAutomaton


def build_plant(spec: StructureSpec, robot: int = 1,
                state_cap: int = DEFAULT_STATE_CAP) -> Plant:
    """Flattened product of the structure and robot models (reachable part only)."""
    table = VariableTable()
    declare_heights(spec, table)
    declare_position(spec, robot, table)
    parts = structure_components(spec, table, robot) + robot_components(spec, robot, table)
    return Plant(spec, robot, flatten(compose(parts, name=f"K[{robot}]"), state_cap))


# -- macrostates -------------------------------------------------------------


def structure_slots(a: ExplicitAutomaton) -> Tuple[int, ...]:
    return tuple(k for k, n in enumerate(a.var_names) if n.startswith("h("))


def structure_key(a: ExplicitAutomaton, state: int, slots=None) -> Tuple[int, ...]:
    slots = structure_slots(a) if slots is None else slots
    val = a.valuations[state]
    return tuple(val[k] for k in slots)


def compute_macrostates(a: ExplicitAutomaton) -> List[Macrostate]:
    slots = structure_slots(a)
    groups: Dict[Tuple[int, ...], set] = {}
    for s in a.states:
        groups.setdefault(structure_key(a, s, slots), set()).add(s)
    return [Macrostate(k, frozenset(groups[k])) for k in sorted(groups)]


def enabled_task_events(m: Macrostate, a: ExplicitAutomaton) -> frozenset:
    return frozenset(e for s in m.members for e in a.out(s) if is_task(e))


# -- property checks ---------------------------------------------------------


def check_task_observer(a: ExplicitAutomaton, macrostates=None) -> List[ObserverViolation]:
    out = []
    for m in macrostates if macrostates is not None else compute_macrostates(a):
        events = sorted(enabled_task_events(m, a), key=event_key)
        if not events:
            continue
        rev: Dict[int, List[int]] = {}
        for s in m.members:
            for e, t in a.out(s).items():
                if is_local(e) and t in m.members:
                    rev.setdefault(t, []).append(s)
        for ev in events:
            seen = {s for s in m.members if ev in a.out(s)}
            queue = deque(seen)
            while queue:
                s = queue.popleft()
                for p in rev.get(s, ()):
                    if p not in seen:
                        seen.add(p)
                        queue.append(p)
            bad = m.members - seen
            if bad:
                out.append(ObserverViolation(m.key, ev, frozenset(bad)))
    return out


def check_totally_reciprocal(a: ExplicitAutomaton, macrostates=None) -> List[ReciprocityViolation]:
    out = []
    for m in macrostates if macrostates is not None else compute_macrostates(a):
        own, other = set(), set()
        for e in enabled_task_events(m, a):
            (own if e.owner == SELF else other).add(e.cell)
        for cell in sorted(own ^ other, key=lambda c: (c[1], c[0])):
            out.append(ReciprocityViolation(m.key, cell))
    return out


# -- repairs -----------------------------------------------------------------


def repair_task_observer(a: ExplicitAutomaton, violations: List[ObserverViolation],
                         mode: str = "states") -> ExplicitAutomaton:
    if not violations:
        return a
    if mode == "states":
        bad = frozenset().union(*(v.states for v in violations))
        return a.restrict(a.states - bad)
    if mode == "transitions":
        # drop the unobservable event from the whole macrostate instead
        drop = set()
        index = {m.key: m for m in compute_macrostates(a)}
        for v in violations:
            for s in index[v.key].members:
                if v.event in a.out(s):
                    drop.add((s, v.event))
        return a.without_transitions(drop)
    raise ValueError(f"unknown repair mode {mode!r}")


def repair_totally_reciprocal(a: ExplicitAutomaton,
                              violations: List[ReciprocityViolation]) -> ExplicitAutomaton:
    if not violations:
        return a
    index = {m.key: m for m in compute_macrostates(a)}
    drop = set()
    for v in violations:
        for s in index[v.key].members:
            for e in a.out(s):
                if isinstance(e, Unload) and e.cell == v.cell:
                    drop.add((s, e))
    return a.without_transitions(drop)


# -- the fixpoint ------------------------------------------------------------


@dataclass
class SynthesisRun:
    automaton: ExplicitAutomaton
    passes: int
    history: List[Tuple[int, int]] = field(default_factory=list)  # (states, transitions) per pass

    @property
    def empty(self) -> bool:
        return self.automaton.is_empty


def _size(a):
    return len(a.states), a.n_transitions


def prune(k: ExplicitAutomaton, mode: str = "states",
          max_passes: int = DEFAULT_MAX_PASSES) -> SynthesisRun:
    """Repeat trim -> task-observer repair -> reciprocity repair until nothing changes."""
    if mode not in REPAIR_MODES:
        raise ValueError(f"unknown repair mode {mode!r}")
    a = k
    history = [_size(a)]
    for passes in range(1, max_passes + 1):
        b = trim(a)
        b = repair_task_observer(b, check_task_observer(b), mode)
        b = repair_totally_reciprocal(b, check_totally_reciprocal(b))
        if b.is_empty:
            b = ExplicitAutomaton.empty(k.alphabet, k.var_names)
        history.append(_size(b))
        log.debug("pass %d: %d states, %d transitions", passes, *history[-1])
        if b.same_as(a) or (b.is_empty and a.is_empty):
            return SynthesisRun(b, passes, history)
        a = b
    raise DivergenceError(f"synthesis did not converge in {max_passes} passes")


@dataclass
class Supervisor:
    automaton: ExplicitAutomaton
    robot: int
    certificate: Dict[str, bool]
    passes: int = 0

    @property
    def macrostates(self) -> List[Macrostate]:
        return compute_macrostates(self.automaton)

    def to_text(self) -> str:
        c = self.certificate
        body = to_text(self.automaton)
        return (f"robot {self.robot}\n{body}certificate trim={int(c['trim'])} "
                f"taskobs={int(c['task_observer'])} reciprocal={int(c['totally_reciprocal'])}\n")


def certify(a: ExplicitAutomaton) -> Dict[str, bool]:
    return {
        "trim": is_nonblocking(a),
        "task_observer": not check_task_observer(a),
        "totally_reciprocal": not check_totally_reciprocal(a),
    }


def synthesize(spec: StructureSpec, robot: int = 1, repair_mode: str = "states",
               state_cap: int = DEFAULT_STATE_CAP,
               max_passes: int = DEFAULT_MAX_PASSES) -> Optional[Supervisor]:
    """Supervisor for *robot*, or None when no nonempty supervisor exists."""
    plant = build_plant(spec, robot, state_cap)
    run = prune(plant.automaton, repair_mode, max_passes)
    if run.empty:
        return None
    return Supervisor(run.automaton, robot, certify(run.automaton), run.passes)


def supervisor_from_text(text: str) -> Supervisor:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("robot "):
        raise ParseError("supervisor file must start with 'robot <i>'", 1)
    try:
        robot = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise ParseError("bad robot line", 1) from None
    automaton, rest = _parse_lines(lines[1:], start_line=2)
    cert = None
    for lineno, raw in rest:
        parts = raw.split()
        if parts and parts[0] == "certificate":
            fields = dict(p.split("=", 1) for p in parts[1:])
            cert = {"trim": fields.get("trim") == "1",
                    "task_observer": fields.get("taskobs") == "1",
                    "totally_reciprocal": fields.get("reciprocal") == "1"}
        else:
            raise ParseError(f"unexpected line {raw!r}", lineno)
    if cert is None:
        raise ParseError("missing certificate footer")
    return Supervisor(automaton, robot, cert)

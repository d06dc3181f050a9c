"""Closed-loop simulation of n robots under replicated supervisors.

Robots take turns in index order.  On its turn a robot picks one event its
own supervisor enables, after the collision layer has removed moves and
unloads onto occupied cells.  Unloads go through the permission round:
every other robot's supervisor must currently enable the matching
``tau[o]`` event, otherwise the request is denied and the turn is spent.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, ScriptError
from .events import MOVES, Local, Unload, event_key, parse_event, tau_other
from .replication import replicate
from .rules import no_trench
from .structure import OUTSIDE, StructureSpec
from .synthesis import Supervisor, synthesize

EXECUTED = "executed"
DENIED = "denied"
COLLISION_BLOCKED = "collision_blocked"

COMPLETED = "completed"
STEP_LIMIT = "step_limit"
STUCK = "stuck"


@dataclass(frozen=True)
class TraceEvent:
    step: int
    robot: int
    event: object
    cause: str = EXECUTED
    denied_by: Tuple[int, ...] = ()

    def to_line(self) -> str:
        line = f"step={self.step} robot={self.robot} event={self.event} cause={self.cause}"
        if self.denied_by:
            line += " denied_by=" + ",".join(str(r) for r in self.denied_by)
        return line


@dataclass
class Trace:
    events: List[TraceEvent]
    outcome: str
    steps: int
    # for stuck runs: whether some robot still had supervisor-level options
    collision_only: Optional[bool] = None

    def to_text(self) -> str:
        lines = [e.to_line() for e in self.events]
        lines.append(f"outcome={self.outcome} steps={self.steps}")
        return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    events, outcome, steps = [], None, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            fields = dict(tok.split("=", 1) for tok in line.split())
        except ValueError:
            raise ParseError(f"malformed trace line {line!r}", lineno) from None
        if "outcome" in fields:
            outcome, steps = fields["outcome"], int(fields.get("steps", 0))
            continue
        try:
            denied = tuple(int(r) for r in fields["denied_by"].split(",")) if "denied_by" in fields else ()
            events.append(TraceEvent(int(fields["step"]), int(fields["robot"]),
                                     parse_event(fields["event"]), fields["cause"], denied))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"malformed trace line {line!r}: {exc}", lineno) from None
    if outcome is None:
        raise ParseError("trace lacks an outcome line")
    return Trace(events, outcome, steps)


def parse_script(text: str) -> List[Tuple[int, object]]:
    """Script lines are ``<robot> <event>``; ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise ParseError(f"expected '<robot> <event>', got {line!r}", lineno)
        try:
            out.append((int(parts[0]), parse_event(parts[1])))
        except ParseError as exc:
            raise ParseError(str(exc), lineno) from None
    return out


@dataclass
class SimulationConfig:
    structure: StructureSpec
    robots: int = 1
    seed: int = 0
    script: Optional[List[Tuple[int, object]]] = None  # None means random policy
    max_steps: int = 10_000

    def __post_init__(self):
        if self.robots < 1:
            raise ValueError("need at least one robot")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class RobotState:
    position: Tuple[int, int]
    loaded: bool
    sup_state: int


@dataclass(frozen=True)
class SimulationState:
    heights: Dict[Tuple[int, int], int]
    robots: Dict[int, RobotState]
    step: int

    @property
    def occupancy(self) -> frozenset:
        return frozenset(r.position for r in self.robots.values() if r.position != OUTSIDE)


class Simulator:
    def __init__(self, config: SimulationConfig, supervisor: Optional[Supervisor] = None):
        self.config = config
        self.spec = config.structure
        if supervisor is None:
            supervisor = synthesize(self.spec, 1)
            if supervisor is None:
                raise ValueError("no supervisor exists for this structure")
        self.robots = list(range(1, config.robots + 1))
        self.sups = {r: replicate(supervisor, r).automaton for r in self.robots}
        self.rng = random.Random(config.seed)
        self.heights = {c: 0 for c in self.spec.cells}
        self.position = {r: OUTSIDE for r in self.robots}
        self.loaded = {r: False for r in self.robots}
        self.sup_state = {r: self.sups[r].initial for r in self.robots}
        self.step_count = 0
        self.trace: List[TraceEvent] = []
        self._turn = 0
        self._script = list(config.script) if config.script is not None else None
        self._silent = 0

    # -- views -------------------------------------------------------------
    @property
    def state(self) -> SimulationState:
        return SimulationState(
            dict(self.heights),
            {r: RobotState(self.position[r], self.loaded[r], self.sup_state[r]) for r in self.robots},
            self.step_count)

    def occupied(self, exclude: int = None) -> set:
        return {p for r, p in self.position.items() if r != exclude and p != OUTSIDE}

    def finished(self, robot: int) -> bool:
        return self.sup_state[robot] in self.sups[robot].marked

    def all_finished(self) -> bool:
        return all(self.finished(r) for r in self.robots)

    def supervisor_actions(self, robot: int) -> List[object]:
        """Own events enabled by the robot's supervisor, before collision filtering."""
        out = self.sups[robot].out(self.sup_state[robot])
        own = [e for e in out if e.robot == robot and (isinstance(e, Local) or e.owner == "self")]
        return sorted(own, key=event_key)

    def _target_cell(self, robot, event):
        if isinstance(event, Unload):
            return event.cell
        if event.kind == "in":
            return event.cell
        if event.kind in MOVES:
            x, y = self.position[robot]
            dx, dy = MOVES[event.kind]
            return (x + dx, y + dy)
        return None

    def enabled_actions(self, robot: int) -> List[object]:
        busy = self.occupied(exclude=robot)
        return [e for e in self.supervisor_actions(robot)
                if self._target_cell(robot, e) not in busy]

    # -- protocol ----------------------------------------------------------
    def attempt_unload(self, robot: int, cell) -> Tuple[bool, Tuple[int, ...]]:
        other_ev = tau_other(cell)
        refusers = tuple(j for j in self.robots
                         if j != robot and self.sups[j].step(self.sup_state[j], other_ev) is None)
        if refusers:
            return False, refusers
        own_ev = Unload("self", tuple(cell), robot)
        for j in self.robots:
            ev = own_ev if j == robot else other_ev
            self.sup_state[j] = self.sups[j].step(self.sup_state[j], ev)
        self.heights[cell] += 1
        self.loaded[robot] = False
        return True, ()

    def _apply_local(self, robot: int, event: Local) -> None:
        self.sup_state[robot] = self.sups[robot].step(self.sup_state[robot], event)
        if event.kind == "p":
            self.loaded[robot] = True
        elif event.kind == "in":
            self.position[robot] = event.cell
        elif event.kind == "out":
            self.position[robot] = OUTSIDE
        else:
            x, y = self.position[robot]
            dx, dy = MOVES[event.kind]
            self.position[robot] = (x + dx, y + dy)

    def _perform(self, robot: int, event) -> TraceEvent:
        if isinstance(event, Unload):
            granted, refusers = self.attempt_unload(robot, event.cell)
            if not granted:
                return TraceEvent(self.step_count, robot, event, DENIED, refusers)
        else:
            self._apply_local(robot, event)
        return TraceEvent(self.step_count, robot, event, EXECUTED)

    # -- stepping ----------------------------------------------------------
    def step(self) -> Optional[TraceEvent]:
        """Advance one turn; returns the trace entry or None for a silent pass."""
        if self._script is not None:
            return self._scripted_step()
        robot = self.robots[self._turn % len(self.robots)]
        self._turn += 1
        entry = None
        if not self.finished(robot):
            choices = self.enabled_actions(robot)
            if choices:
                entry = self._perform(robot, self.rng.choice(choices))
                self._silent = 0
            else:
                blocked = self.supervisor_actions(robot)
                if blocked:
                    entry = TraceEvent(self.step_count, robot, self.rng.choice(blocked),
                                       COLLISION_BLOCKED)
                self._silent += 1
        if entry is not None:
            self.trace.append(entry)
        self.step_count += 1
        return entry

    def _scripted_step(self) -> TraceEvent:
        robot, event = self._script.pop(0)
        if robot not in self.sups:
            raise ScriptError(self.step_count, event, f"unknown robot {robot}")
        if event not in self.enabled_actions(robot):
            raise ScriptError(self.step_count, event)
        entry = self._perform(robot, event)
        self.trace.append(entry)
        self.step_count += 1
        return entry

    def _stuck(self) -> bool:
        active = [r for r in self.robots if not self.finished(r)]
        return bool(active) and self._silent >= len(active)

    def collision_only(self) -> bool:
        """True when some unfinished robot still has supervisor-level options."""
        return any(self.supervisor_actions(r) for r in self.robots if not self.finished(r))

    def run(self) -> Trace:
        while True:
            if self.all_finished():
                outcome = COMPLETED
                break
            if self._script is not None and not self._script:
                outcome = STEP_LIMIT
                break
            if self.step_count >= self.config.max_steps:
                outcome = STEP_LIMIT
                break
            self.step()
            if self._script is None and self._stuck():
                outcome = STUCK
                break
        trace = Trace(list(self.trace), outcome, self.step_count)
        if outcome == STUCK:
            trace.collision_only = self.collision_only()
        return trace


def run(config: SimulationConfig, supervisor: Optional[Supervisor] = None) -> Trace:
    return Simulator(config, supervisor).run()


# -- audit ---------------------------------------------------------------------


def audit_trace(trace: Trace, spec: StructureSpec, supervisor: Supervisor, robots: int) -> List[str]:
    """Replay a trace against the supervisors; returns a list of problems (empty if sound)."""
    problems = []
    ids = list(range(1, robots + 1))
    sups = {r: replicate(supervisor, r).automaton for r in ids}
    state = {r: sups[r].initial for r in ids}
    heights = {c: 0 for c in spec.cells}
    for te in trace.events:
        if te.cause != EXECUTED:
            continue
        r, e = te.robot, te.event
        if isinstance(e, Unload):
            if not no_trench(heights, e.cell):
                problems.append(f"step {te.step}: placement on {e.cell} violates E1")
            for j in ids:
                ev = e if j == r else tau_other(e.cell)
                nxt = sups[j].step(state[j], ev)
                if nxt is None:
                    what = "own" if j == r else "permission"
                    problems.append(f"step {te.step}: robot {j} supervisor rejects {ev} ({what})")
                    return problems
                state[j] = nxt
            heights[e.cell] += 1
        else:
            nxt = sups[r].step(state[r], e)
            if nxt is None:
                problems.append(f"step {te.step}: robot {r} supervisor rejects {e}")
                return problems
            state[r] = nxt
    if trace.outcome == COMPLETED:
        if any(heights[c] != spec.target[c] for c in spec.cells):
            problems.append("completed with heights different from target")
        for r in ids:
            a = sups[r]
            label = a.label(state[r])
            if (label[f"xpos[{r}]"], label[f"ypos[{r}]"]) != (0, 0):
                problems.append(f"robot {r} not outside at completion")
            if state[r] not in a.marked:
                problems.append(f"robot {r} supervisor not marked at completion")
    return problems


def replay_positions(trace: Trace, spec: StructureSpec, robots: int):
    """Yield (trace event, heights, positions) after each executed event."""
    heights = {c: 0 for c in spec.cells}
    pos = {r: OUTSIDE for r in range(1, robots + 1)}
    for te in trace.events:
        if te.cause != EXECUTED:
            continue
        e = te.event
        if isinstance(e, Unload):
            heights[e.cell] += 1
        elif e.kind == "in":
            pos[te.robot] = e.cell
        elif e.kind == "out":
            pos[te.robot] = OUTSIDE
        elif e.kind in MOVES:
            x, y = pos[te.robot]
            dx, dy = MOVES[e.kind]
            pos[te.robot] = (x + dx, y + dy)
        yield te, dict(heights), dict(pos)

"""Joint behaviour of the refined supervisors: explicit product and nonblocking check."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .efa import DEFAULT_STATE_CAP
from .events import INDEXED, Unload, tau_self
from .explicit import ExplicitAutomaton, coreachable, reachable, shortest_path, sync_product
from .replication import refine, replicate
from .robot import xvar, yvar
from .rules import no_trench
from .structure import StructureSpec, hvar
from .synthesis import Supervisor, build_plant, synthesize

log = logging.getLogger(__name__)


def joint(refined: Sequence[ExplicitAutomaton], state_cap: int = DEFAULT_STATE_CAP) -> ExplicitAutomaton:
    return sync_product(refined, state_cap)


def actor(event) -> int:
    """Robot that performs *event* in the joint behaviour."""
    return event.robot


def trace_event(event):
    """Joint label rendered as the acting robot's own event."""
    if isinstance(event, Unload) and event.owner == INDEXED:
        return tau_self(event.robot, event.cell)
    return event


@dataclass
class VerificationReport:
    nonblocking: bool
    joint_states: int = 0
    joint_transitions: int = 0
    witness: Optional[List[object]] = None
    supervisor_exists: bool = True

    def to_text(self) -> str:
        if not self.supervisor_exists:
            return "RESULT no supervisor exists\n"
        lines = [f"RESULT nonblocking={str(self.nonblocking).lower()} "
                 f"states={self.joint_states} trans={self.joint_transitions}"]
        if self.witness is not None:
            lines.append("WITNESS")
            for k, e in enumerate(self.witness):
                lines.append(f"step={k} robot={actor(e)} event={trace_event(e)} cause=executed")
        return "\n".join(lines) + "\n"


def check_nonblocking(j: ExplicitAutomaton) -> Tuple[bool, Optional[List[object]]]:
    """Nonblocking verdict plus a shortest trace to a blocking state when it fails."""
    if j.is_empty:
        return False, []
    acc = reachable(j)
    good = coreachable(j, acc)
    blocking = acc - good
    if not blocking:
        return True, None
    path = shortest_path(j, blocking)
    return False, [e for e, _ in path]


def plant_as_supervisor(spec: StructureSpec, robot: int = 1,
                        state_cap: int = DEFAULT_STATE_CAP) -> Supervisor:
    """The unpruned plant dressed as a supervisor (negative control)."""
    k = build_plant(spec, robot, state_cap).automaton
    return Supervisor(k, robot, {"trim": False, "task_observer": False,
                                 "totally_reciprocal": False})


def joint_of(sup: Supervisor, n: int, state_cap: int = DEFAULT_STATE_CAP) -> ExplicitAutomaton:
    robots = list(range(1, n + 1))
    refined = [refine(replicate(sup, j), robots) for j in robots]
    return joint(refined, state_cap)


def verify_theorem(spec: StructureSpec, n: int, state_cap: int = DEFAULT_STATE_CAP,
                   supervisor: Optional[Supervisor] = None,
                   use_plant: bool = False) -> VerificationReport:
    if n < 1:
        raise ValueError("need at least one robot")
    if use_plant:
        sup = plant_as_supervisor(spec, 1, state_cap)
    else:
        sup = supervisor if supervisor is not None else synthesize(spec, 1, state_cap=state_cap)
    if sup is None:
        return VerificationReport(False, supervisor_exists=False)
    j = joint_of(sup, n, state_cap)
    ok, witness = check_nonblocking(j)
    return VerificationReport(ok, len(j.states), j.n_transitions, witness)


@dataclass
class InvariantReport:
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_joint_invariants(j: ExplicitAutomaton, spec: StructureSpec, n: int = None) -> InvariantReport:
    """Marked states complete and vacated; E1 on every placement; monotone heights."""
    report = InvariantReport()
    if j.is_empty:
        report.warnings.append("joint automaton is empty; invariants hold vacuously")
        return report
    names = j.var_names
    hslots = {c: names.index(hvar(c)) for c in spec.task_cells if hvar(c) in names}
    robots = sorted({int(nm[5:-1]) for nm in names if nm.startswith("xpos[")})
    if n is not None and len(robots) != n:
        report.warnings.append(f"found position variables for {len(robots)} robots, expected {n}")
    pos = {r: (names.index(xvar(r)), names.index(yvar(r))) for r in robots}

    def heights(s):
        v = j.valuations[s]
        return {c: v[k] for c, k in hslots.items()}

    for s in sorted(j.marked):
        h = heights(s)
        if any(h.get(c, 0) != spec.target[c] for c in spec.task_cells):
            report.violations.append(f"marked state {s} has incomplete structure {h}")
        v = j.valuations[s]
        for r, (kx, ky) in pos.items():
            if (v[kx], v[ky]) != (0, 0):
                report.violations.append(f"marked state {s}: robot {r} inside at {(v[kx], v[ky])}")

    for s, e, t in j.transitions():
        before, after = heights(s), heights(t)
        if isinstance(e, Unload):
            if not no_trench(before, e.cell):
                report.violations.append(f"transition {s} --{e}--> {t} violates E1")
            expected = dict(before)
            expected[e.cell] = expected.get(e.cell, 0) + 1
            if after != expected:
                report.violations.append(f"transition {s} --{e}--> {t} is not a single-brick increment")
        elif after != before:
            report.violations.append(f"local transition {s} --{e}--> {t} changes the structure")
    return report

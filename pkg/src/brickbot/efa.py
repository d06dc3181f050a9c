"""Extended finite automata over a shared table of bounded integer variables.

An :class:`ExtendedAutomaton` has symbolic transitions ``(source, event,
guard, actions, target)``.  :func:`compose` builds the synchronous product
lazily (product location vectors are materialised only when visited) and
:func:`flatten` expands the reachable part into an explicit automaton.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import ModelError, ResourceLimitError
from .events import event_key
from .explicit import ExplicitAutomaton
from .guards import TRUE, compile_guard, conj, eval_guard, variables_read

log = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 5_000_000


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    initial: int


class VariableTable:
    """Ordered declarations; a valuation is a tuple in declaration order."""

    def __init__(self, entries: Iterable[Tuple[str, int, int, int]] = ()):
        self.decls: List[VarDecl] = []
        self.index: Dict[str, int] = {}
        for entry in entries:
            self.declare(*entry)

    def declare(self, name: str, lo: int, hi: int, initial: int) -> None:
        if name in self.index:
            raise ModelError(f"variable {name!r} declared twice")
        if not lo <= initial <= hi:
            raise ModelError(f"initial value {initial} of {name!r} outside {lo}..{hi}")
        self.index[name] = len(self.decls)
        self.decls.append(VarDecl(name, lo, hi, initial))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.decls)

    def __contains__(self, name):
        return name in self.index

    def __len__(self):
        return len(self.decls)

    def initial(self) -> Tuple[int, ...]:
        return tuple(d.initial for d in self.decls)

    def as_dict(self, values: Sequence[int]) -> Dict[str, int]:
        return dict(zip(self.names, values))

    def as_tuple(self, valuation: Mapping[str, int]) -> Tuple[int, ...]:
        return tuple(valuation[name] for name in self.names)

    def domain(self, name: str) -> Tuple[int, int]:
        d = self.decls[self.index[name]]
        return d.lo, d.hi

    def check_valuation(self, valuation: Mapping[str, int]) -> None:
        for d in self.decls:
            if d.name not in valuation:
                raise ModelError(f"valuation misses {d.name!r}")
            if not d.lo <= valuation[d.name] <= d.hi:
                raise ModelError(f"{d.name}={valuation[d.name]} outside {d.lo}..{d.hi}")


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    """``target := source + offset``; ``source`` None means the constant ``offset``."""

    target: str
    source: Optional[str]
    offset: int = 0

    def __str__(self):
        if self.source is None:
            return f"{self.target} := {self.offset}"
        if self.offset == 0:
            return f"{self.target} := {self.source}"
        sign = "+" if self.offset > 0 else "-"
        return f"{self.target} := {self.source} {sign} {abs(self.offset)}"


def assign_const(target: str, value: int) -> Assign:
    return Assign(target, None, value)


def increment(target: str, by: int = 1) -> Assign:
    return Assign(target, target, by)


def apply_actions(actions: Sequence[Assign], valuation: Mapping[str, int], table: VariableTable):
    """Apply *actions* left to right; None when a value would leave its domain."""
    out = dict(valuation)
    for a in actions:
        value = a.offset if a.source is None else out[a.source] + a.offset
        lo, hi = table.domain(a.target)
        if not lo <= value <= hi:
            return None
        out[a.target] = value
    return out


def _compile_actions(actions: Sequence[Assign], table: VariableTable):
    if not actions:
        return None
    steps = []
    for a in actions:
        if a.target not in table:
            raise ModelError(f"action assigns undeclared variable {a.target!r}")
        if a.source is not None and a.source not in table:
            raise ModelError(f"action reads undeclared variable {a.source!r}")
        lo, hi = table.domain(a.target)
        src = None if a.source is None else table.index[a.source]
        steps.append((table.index[a.target], src, a.offset, lo, hi))
    steps = tuple(steps)

    def run(v):
        v = list(v)
        for dst, src, off, lo, hi in steps:
            value = off if src is None else v[src] + off
            if value < lo or value > hi:
                return None
            v[dst] = value
        return tuple(v)

    return run


# -- automata ----------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    source: Hashable
    event: object
    guard: object = TRUE
    actions: Tuple[Assign, ...] = ()
    target: Hashable = None


@dataclass
class _Compiled:
    event: object
    guards: tuple
    run: object
    target: Hashable


class ExtendedAutomaton:
    """A single EFA component."""

    def __init__(self, name, table: VariableTable, locations, initial, marked,
                 transitions: Iterable[Transition], alphabet=None):
        self.name = name
        self.table = table
        self.locations = tuple(locations)
        self.initial = initial
        self.marked = frozenset(marked)
        self.transitions = tuple(transitions)
        events = {t.event for t in self.transitions}
        self.alphabet = frozenset(events if alphabet is None else alphabet)
        locs = set(self.locations)
        if initial not in locs:
            raise ModelError(f"{name}: initial location {initial!r} not declared")
        for t in self.transitions:
            if t.source not in locs or t.target not in locs:
                raise ModelError(f"{name}: transition {t} uses undeclared location")
            if t.event not in self.alphabet:
                raise ModelError(f"{name}: event {t.event} outside alphabet")
            missing = variables_read(t.guard) - set(table.index)
            if missing:
                raise ModelError(f"{name}: guard reads undeclared variables {sorted(missing)}")
        self._by_source: Dict[Hashable, List[Transition]] = {}
        for t in self.transitions:
            self._by_source.setdefault(t.source, []).append(t)
        self._compiled: Dict[Hashable, List[_Compiled]] = {}

    # components / product protocol
    @property
    def components(self):
        return (self,)

    def is_marked(self, location) -> bool:
        return location in self.marked

    def transitions_from(self, location) -> List[Transition]:
        return list(self._by_source.get(location, ()))

    def writes(self, event) -> frozenset:
        return frozenset(a.target for t in self.transitions if t.event == event for a in t.actions)

    def compiled_from(self, location) -> List[_Compiled]:
        out = self._compiled.get(location)
        if out is None:
            out = []
            for t in self.transitions_from(location):
                g = compile_guard(t.guard, self.table.index)
                out.append(_Compiled(t.event, (g,), tuple(t.actions), t.target))
            self._compiled[location] = out
        return out

    def __repr__(self):
        return (f"ExtendedAutomaton({self.name!r}, {len(self.locations)} locations, "
                f"{len(self.transitions)} transitions)")


class Composition:
    """Lazy synchronous product of EFA components sharing one variable table."""

    def __init__(self, components: Sequence[ExtendedAutomaton], name=None):
        flat: List[ExtendedAutomaton] = []
        for c in components:
            flat.extend(c.components)
        if not flat:
            raise ModelError("compose needs at least one automaton")
        table = flat[0].table
        for c in flat:
            if c.table is not table:
                raise ModelError(f"{c.name}: components must share one VariableTable")
        self.name = name or "||".join(str(c.name) for c in flat)
        self.table = table
        self._components = tuple(flat)
        self.alphabet = frozenset().union(*(c.alphabet for c in flat))
        self.owners = {e: tuple(k for k, c in enumerate(flat) if e in c.alphabet)
                       for e in self.alphabet}
        self._check_write_conflicts()
        self.initial = tuple(c.initial for c in flat)
        self._compiled: Dict[tuple, List[_Compiled]] = {}

    @property
    def components(self):
        return self._components

    def _check_write_conflicts(self):
        for e, owners in self.owners.items():
            if len(owners) < 2:
                continue
            seen: Dict[str, str] = {}
            for k in owners:
                c = self._components[k]
                for var in c.writes(e):
                    if var in seen:
                        raise ModelError(
                            f"write conflict on {var!r} for shared event {e} "
                            f"between {seen[var]} and {c.name}")
                    seen[var] = c.name

    @property
    def locations(self):
        return itertools.product(*(c.locations for c in self._components))

    @property
    def marked(self):
        return frozenset(itertools.product(*(c.marked for c in self._components)))

    def is_marked(self, location) -> bool:
        return all(c.is_marked(q) for c, q in zip(self._components, location))

    def transitions_from(self, location) -> List[Transition]:
        """Symbolic product transitions leaving *location* (guards conjoined)."""
        out = []
        for e in sorted(self.alphabet, key=event_key):
            owners = self.owners[e]
            choices = []
            for k in owners:
                ts = [t for t in self._components[k].transitions_from(location[k]) if t.event == e]
                if not ts:
                    break
                choices.append(ts)
            else:
                for combo in itertools.product(*choices):
                    target = list(location)
                    for k, t in zip(owners, combo):
                        target[k] = t.target
                    out.append(Transition(
                        tuple(location), e,
                        conj(*(t.guard for t in combo)),
                        tuple(a for t in combo for a in t.actions),
                        tuple(target)))
        return out

    @property
    def transitions(self):
        out = []
        for loc in self.locations:
            out.extend(self.transitions_from(loc))
        return out

    def compiled_from(self, location) -> List[_Compiled]:
        out = self._compiled.get(location)
        if out is not None:
            return out
        per_event: Dict[object, List[List[_Compiled]]] = {}
        for k, c in enumerate(self._components):
            for ct in c.compiled_from(location[k]):
                per_event.setdefault(ct.event, [[] for _ in self.owners[ct.event]])
                per_event[ct.event][self.owners[ct.event].index(k)].append(ct)
        out = []
        for e in sorted(per_event, key=event_key):
            choices = per_event[e]
            if any(not ch for ch in choices):
                continue
            owners = self.owners[e]
            for combo in itertools.product(*choices):
                target = list(location)
                for k, ct in zip(owners, combo):
                    target[k] = ct.target
                out.append(_Compiled(
                    e,
                    tuple(g for ct in combo for g in ct.guards),
                    tuple(a for ct in combo for a in ct.run),
                    tuple(target)))
        self._compiled[location] = out
        return out

    def __repr__(self):
        return f"Composition({self.name!r}, {len(self._components)} components)"


def compose(efas: Sequence[ExtendedAutomaton], name=None) -> Composition:
    return Composition(efas, name=name)


# -- explicit expansion ------------------------------------------------------


def flatten(efa, state_cap: int = DEFAULT_STATE_CAP) -> ExplicitAutomaton:
    """Breadth-first expansion of the reachable (location, valuation) pairs.

    States are numbered in BFS order with outgoing events visited in
    ``event_key`` order, so numbering is canonical for a given model.
    """
    table = efa.table
    runners: Dict[tuple, object] = {}

    def runner(actions):
        r = runners.get(actions)
        if r is None and actions not in runners:
            r = runners[actions] = _compile_actions(actions, table)
        return r

    init = (efa.initial, table.initial())
    ids = {init: 0}
    labels = [init]
    queue = deque([init])
    delta: Dict[int, Dict[object, int]] = {}
    while queue:
        state = queue.popleft()
        loc, val = state
        sid = ids[state]
        out: Dict[object, int] = {}
        for ct in efa.compiled_from(loc):
            if not all(g(val) for g in ct.guards):
                continue
            run = runner(ct.run)
            nval = val if run is None else run(val)
            if nval is None:
                continue
            if ct.event in out:
                raise ModelError(f"nondeterministic on {ct.event} at location {loc!r}")
            nxt = (ct.target, nval)
            nid = ids.get(nxt)
            if nid is None:
                nid = ids[nxt] = len(labels)
                if nid >= state_cap:
                    raise ResourceLimitError(state_cap)
                labels.append(nxt)
                queue.append(nxt)
            out[ct.event] = nid
        if out:
            delta[sid] = out
    log.debug("flatten %s: %d states", efa.name, len(labels))
    return ExplicitAutomaton(
        states=range(len(labels)),
        initial=0,
        marked=[i for i, (loc, _) in enumerate(labels) if efa.is_marked(loc)],
        delta=delta,
        alphabet=efa.alphabet,
        var_names=table.names,
        valuations={i: v for i, (_, v) in enumerate(labels)},
        locations={i: loc for i, (loc, _) in enumerate(labels)},
    )


def eval_transition(t: Transition, valuation: Mapping[str, int], table: VariableTable):
    """Reference (uncompiled) semantics of one symbolic transition."""
    if not eval_guard(t.guard, valuation):
        return None
    return apply_actions(t.actions, valuation, table)

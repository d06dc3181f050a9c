"""Explicit deterministic automata: trim, nonblocking test, products, text I/O."""
from __future__ import annotations

import logging
from collections import deque
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import ModelError, ParseError, ResourceLimitError
from .events import event_key, parse_event

log = logging.getLogger(__name__)


class ExplicitAutomaton:
    """Deterministic automaton over integer state ids.

    ``valuations`` optionally labels each state with the variable values
    (ordered as ``var_names``) it was expanded from; synthesis uses them to
    recover the structure heights and robot position of a state.
    Instances are treated as immutable once built.
    """

    def __init__(self, states: Iterable[int], initial: Optional[int], marked: Iterable[int],
                 delta: Mapping[int, Mapping[object, int]], alphabet: Iterable,
                 var_names: Sequence[str] = (), valuations: Optional[Mapping[int, tuple]] = None,
                 locations: Optional[Mapping[int, tuple]] = None):
        self.states = frozenset(states)
        self.initial = initial if initial in self.states else None
        self.marked = frozenset(marked) & self.states
        self.alphabet = frozenset(alphabet)
        self.delta: Dict[int, Dict[object, int]] = {}
        for s, out in delta.items():
            if s not in self.states:
                continue
            kept = {e: t for e, t in out.items() if t in self.states}
            if kept:
                self.delta[s] = kept
        self.var_names = tuple(var_names)
        self.valuations = dict(valuations) if valuations else {}
        self.locations = dict(locations) if locations else {}

    @classmethod
    def empty(cls, alphabet=(), var_names=()):
        return cls((), None, (), {}, alphabet, var_names)

    # -- queries --------------------------------------------------------
    def __len__(self):
        return len(self.states)

    @property
    def is_empty(self) -> bool:
        return self.initial is None

    @property
    def n_transitions(self) -> int:
        return sum(len(out) for out in self.delta.values())

    def out(self, state: int) -> Mapping[object, int]:
        return self.delta.get(state, {})

    def step(self, state: int, event) -> Optional[int]:
        return self.delta.get(state, {}).get(event)

    def transitions(self) -> Iterator[Tuple[int, object, int]]:
        for s in sorted(self.delta):
            out = self.delta[s]
            for e in sorted(out, key=event_key):
                yield s, e, out[e]

    def run(self, events: Iterable) -> Optional[int]:
        state = self.initial
        for e in events:
            if state is None:
                return None
            state = self.step(state, e)
        return state

    def label(self, state: int) -> Dict[str, int]:
        return dict(zip(self.var_names, self.valuations[state]))

    def value(self, state: int, name: str) -> int:
        return self.valuations[state][self.var_names.index(name)]

    # -- derived automata ----------------------------------------------
    def restrict(self, keep: Iterable[int]) -> "ExplicitAutomaton":
        """Subautomaton on the given states, ids preserved."""
        keep = frozenset(keep) & self.states
        return ExplicitAutomaton(
            keep, self.initial if self.initial in keep else None, self.marked & keep,
            self.delta, self.alphabet, self.var_names,
            {s: v for s, v in self.valuations.items() if s in keep},
            {s: v for s, v in self.locations.items() if s in keep})

    def without_transitions(self, drop: Iterable[Tuple[int, object]]) -> "ExplicitAutomaton":
        drop = set(drop)
        delta = {s: {e: t for e, t in out.items() if (s, e) not in drop}
                 for s, out in self.delta.items()}
        return ExplicitAutomaton(self.states, self.initial, self.marked, delta,
                                 self.alphabet, self.var_names, self.valuations, self.locations)

    def relabel(self, mapping: Callable[[object], Iterable], alphabet=None,
                var_names=None) -> "ExplicitAutomaton":
        """Replace each transition label ``e`` by every label in ``mapping(e)``."""
        delta: Dict[int, Dict[object, int]] = {}
        for s, out in self.delta.items():
            new: Dict[object, int] = {}
            for e, t in out.items():
                for e2 in mapping(e):
                    if e2 in new and new[e2] != t:
                        raise ModelError(f"relabelling makes state {s} nondeterministic on {e2}")
                    new[e2] = t
            delta[s] = new
        if alphabet is None:
            alphabet = {e2 for e in self.alphabet for e2 in mapping(e)}
        return ExplicitAutomaton(self.states, self.initial, self.marked, delta, alphabet,
                                 self.var_names if var_names is None else var_names,
                                 self.valuations, self.locations)

    def same_as(self, other: "ExplicitAutomaton") -> bool:
        return (self.states == other.states and self.initial == other.initial
                and self.marked == other.marked and self.delta == other.delta
                and self.alphabet == other.alphabet)

    def is_subautomaton_of(self, other: "ExplicitAutomaton") -> bool:
        if not self.states <= other.states or not self.marked <= other.marked:
            return False
        if self.initial is not None and self.initial != other.initial:
            return False
        return all(other.step(s, e) == t for s, e, t in self.transitions())

    def __repr__(self):
        return f"ExplicitAutomaton({len(self.states)} states, {self.n_transitions} transitions)"


# -- reachability ----------------------------------------------------------


def reachable(f: ExplicitAutomaton) -> frozenset:
    if f.initial is None:
        return frozenset()
    seen = {f.initial}
    queue = deque([f.initial])
    while queue:
        s = queue.popleft()
        for t in f.out(s).values():
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return frozenset(seen)


def predecessors(f: ExplicitAutomaton) -> Dict[int, List[int]]:
    pred: Dict[int, List[int]] = {}
    for s, out in f.delta.items():
        for t in out.values():
            pred.setdefault(t, []).append(s)
    return pred


def coreachable(f: ExplicitAutomaton, within: Optional[frozenset] = None) -> frozenset:
    """States that can reach a marked state (paths restricted to *within*)."""
    within = f.states if within is None else within
    pred = predecessors(f)
    seen = set(f.marked & within)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        for p in pred.get(s, ()):
            if p in within and p not in seen:
                seen.add(p)
                queue.append(p)
    return frozenset(seen)


def trim(f: ExplicitAutomaton) -> ExplicitAutomaton:
    acc = reachable(f)
    keep = coreachable(f, acc)
    if f.initial not in keep:
        return ExplicitAutomaton.empty(f.alphabet, f.var_names)
    # every state on a path initial -> s with s co-accessible is itself
    # co-accessible, so the restriction stays accessible
    return f.restrict(keep)


def is_nonblocking(f: ExplicitAutomaton) -> bool:
    if f.is_empty:
        return False
    return trim(f).states == f.states


def shortest_path(f: ExplicitAutomaton, targets: Iterable[int]) -> Optional[List[Tuple[object, int]]]:
    """BFS from initial to the first state in *targets*; ``[(event, state), ...]``."""
    targets = set(targets)
    if f.initial is None:
        return None
    if f.initial in targets:
        return []
    parent = {f.initial: None}
    queue = deque([f.initial])
    while queue:
        s = queue.popleft()
        for e, t in sorted(f.out(s).items(), key=lambda it: event_key(it[0])):
            if t in parent:
                continue
            parent[t] = (s, e)
            if t in targets:
                path = []
                cur = t
                while parent[cur] is not None:
                    p, ev = parent[cur]
                    path.append((ev, cur))
                    cur = p
                return path[::-1]
            queue.append(t)
    return None


# -- synchronous product of explicit automata --------------------------------


def sync_product(automata: Sequence[ExplicitAutomaton],
                 state_cap: int = 5_000_000) -> ExplicitAutomaton:
    """Explicit synchronous product; shared events move all owners in lock-step.

    Product states are numbered in BFS order.  When every component carries
    valuations, product states carry the merged valuation (shared variables
    must agree) and ``locations`` records the component state tuple.
    """
    if not automata:
        raise ModelError("product of zero automata")
    alphabet = frozenset().union(*(a.alphabet for a in automata))
    if any(a.is_empty for a in automata):
        return ExplicitAutomaton.empty(alphabet)
    owners = {e: tuple(k for k, a in enumerate(automata) if e in a.alphabet) for e in alphabet}
    order = {e: event_key(e) for e in alphabet}

    labelled = all(a.valuations for a in automata)
    names: List[str] = []
    if labelled:
        for a in automata:
            names.extend(n for n in a.var_names if n not in names)
    slots = [[names.index(n) for n in a.var_names] for a in automata] if labelled else []

    def merge(tup):
        out = [None] * len(names)
        for k, s in enumerate(tup):
            for slot, value in zip(slots[k], automata[k].valuations[s]):
                if out[slot] is not None and out[slot] != value:
                    raise ModelError(f"components disagree on {names[slot]} in product state {tup}")
                out[slot] = value
        return tuple(out)

    # work on interned event numbers; event objects hash slowly
    events = sorted(alphabet, key=order.__getitem__)
    code = {e: k for k, e in enumerate(events)}
    tables = [{s: {code[e]: t for e, t in a.delta.get(s, {}).items()} for s in a.states}
              for a in automata]
    owner_codes = [owners[e] for e in events]

    init = tuple(a.initial for a in automata)
    ids = {init: 0}
    tuples = [init]
    queue = deque([init])
    delta: Dict[int, Dict[object, int]] = {}
    while queue:
        tup = queue.popleft()
        sid = ids[tup]
        candidates = set()
        for k, s in enumerate(tup):
            candidates.update(tables[k][s])
        out = {}
        for c in sorted(candidates):
            nxt = list(tup)
            for k in owner_codes[c]:
                t = tables[k][tup[k]].get(c)
                if t is None:
                    break
                nxt[k] = t
            else:
                nxt = tuple(nxt)
                nid = ids.get(nxt)
                if nid is None:
                    nid = ids[nxt] = len(tuples)
                    if nid >= state_cap:
                        raise ResourceLimitError(state_cap)
                    tuples.append(nxt)
                    queue.append(nxt)
                out[events[c]] = nid
        if out:
            delta[sid] = out
    marked = [i for i, tup in enumerate(tuples)
              if all(s in a.marked for a, s in zip(automata, tup))]
    return ExplicitAutomaton(
        range(len(tuples)), 0, marked, delta, alphabet, tuple(names),
        {i: merge(t) for i, t in enumerate(tuples)} if labelled else None,
        {i: t for i, t in enumerate(tuples)})


# -- text format -------------------------------------------------------------


def canonical_ids(f: ExplicitAutomaton) -> Dict[int, int]:
    return {s: k for k, s in enumerate(sorted(f.states))}


def to_text(f: ExplicitAutomaton) -> str:
    """Line-oriented serialisation; states renumbered 0..N-1 by sorted id."""
    ids = canonical_ids(f)
    init = "-" if f.initial is None else str(ids[f.initial])
    alphabet = " ".join(sorted((str(e) for e in f.alphabet)))
    lines = [f"states {len(ids)} initial {init} alphabet {alphabet}".rstrip()]
    if f.var_names and f.valuations:
        lines.append("vars " + " ".join(f.var_names))
        for s in sorted(f.states):
            lines.append(f"val {ids[s]} " + " ".join(str(x) for x in f.valuations[s]))
    for s in sorted(f.marked):
        lines.append(f"mark {ids[s]}")
    for s, e, t in f.transitions():
        lines.append(f"trans {ids[s]} {e} {ids[t]}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> ExplicitAutomaton:
    return _parse_lines(text.splitlines())[0]


def _parse_lines(lines, start_line=1):
    """Parse automaton lines; returns (automaton, unconsumed (lineno, line) pairs)."""
    header = None
    var_names: Tuple[str, ...] = ()
    vals: Dict[int, tuple] = {}
    marked: List[int] = []
    delta: Dict[int, Dict[object, int]] = {}
    rest = []
    for lineno, raw in enumerate(lines, start_line):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        try:
            if head == "states":
                if header is not None or len(parts) < 5 or parts[2] != "initial" or parts[4] != "alphabet":
                    raise ParseError("bad header", lineno)
                n = int(parts[1])
                init = None if parts[3] == "-" else int(parts[3])
                alphabet = [parse_event(p) for p in parts[5:]]
                header = (n, init, alphabet)
            elif header is None:
                raise ParseError("header line 'states N initial I alphabet ...' must come first", lineno)
            elif head == "vars":
                var_names = tuple(parts[1:])
            elif head == "val":
                vals[int(parts[1])] = tuple(int(x) for x in parts[2:])
            elif head == "mark" and len(parts) == 2:
                marked.append(int(parts[1]))
            elif head == "trans" and len(parts) == 4:
                s, e, t = int(parts[1]), parse_event(parts[2]), int(parts[3])
                if e in delta.setdefault(s, {}):
                    raise ParseError(f"duplicate transition on {e} from {s}", lineno)
                delta[s][e] = t
            else:
                rest.append((lineno, raw))
        except ParseError as exc:
            if exc.line is None:
                raise ParseError(str(exc), lineno) from None
            raise
        except ValueError:
            raise ParseError(f"malformed line {line!r}", lineno) from None
    if header is None:
        raise ParseError("missing header")
    n, init, alphabet = header
    for s, out in delta.items():
        for e, t in out.items():
            if not (0 <= s < n and 0 <= t < n):
                raise ParseError(f"transition {s} {e} {t} references unknown state")
            if e not in alphabet:
                raise ParseError(f"event {e} not in alphabet")
    f = ExplicitAutomaton(range(n), init, marked, delta, alphabet, var_names, vals or None)
    return f, rest

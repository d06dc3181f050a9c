import random

import pytest
from hypothesis import given, settings, strategies as st

from brickbot.efa import compose, flatten
from brickbot.errors import ParseError
from brickbot.events import Unload, tau_other, tau_self
from brickbot.explicit import is_nonblocking
from brickbot.guards import eval_guard
from brickbot.structure import (OUTSIDE, StructureSpec, UnreachableTargetError, build_g1, build_g2,
                                build_g2_cell, build_structure_automaton, heights_of, hvar,
                                parse_structure, structure_table)
from conftest import load
from oracles import all_grids, coaccessible_heights, structure_graph, trench


def spec_of(w, d, target, io=None):
    return StructureSpec(w, d, target, tuple(io or [(1, 1)]))


def tau_guard(g, event):
    return [t.guard for t in g.transitions if t.event == event]


# -- parsing ---------------------------------------------------------------


def test_parse_single():
    s = parse_structure("grid 1 1\nio 1,1\nheights\n1\n")
    assert (s.width, s.height, s.target, tuple(s.io)) == (1, 1, {(1, 1): 1}, ((1, 1),))


def test_parse_site_corners_and_rows():
    s = load("site5")
    assert set(s.io) == {(1, 1), (1, 5), (5, 1), (5, 5)}
    # first height row is y = 1, leftmost column is x = 1
    assert s.target[(1, 2)] == 2 and s.target[(2, 2)] == 1 and s.target[(2, 1)] == 0


def test_parse_comments_and_round_trip():
    s = load("trap")
    assert parse_structure(s.to_text()) == s


@pytest.mark.parametrize("text, line, fragment", [
    ("grid 5 5\nio 6,1\nheights\n" + "0 0 0 0 0\n" * 5, 2, "io cell outside domain"),
    ("grid 2 2\nio 1,1\nheights\n1 1\n1\n", 5, "entries"),
    ("grid 2 2\nio 1,1\nheights\n1 1\n", 4, "rows"),
    ("grid two 2\nio 1,1\nheights\n1 1\n", 1, "integers"),
    ("grid 1 1\nio 1;1\nheights\n1\n", 2, "io cell"),
    ("grid 1 1\nio 1,1\nheights\n-1\n", 4, ""),
])
def test_parse_errors_name_line(text, line, fragment):
    with pytest.raises(ParseError) as info:
        parse_structure(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


def test_neighbour_table():
    s = load("two_io")
    n = s.neighbor_table()
    assert set(n[OUTSIDE]) == set(s.io)
    assert OUTSIDE in n[(1, 1)] and OUTSIDE in n[(4, 1)] and OUTSIDE not in n[(2, 1)]
    for c in s.cells:
        for m in n[c]:
            if m != OUTSIDE:
                assert abs(c[0] - m[0]) + abs(c[1] - m[1]) == 1


# -- G1 / G2 -------------------------------------------------------------


def test_g1_single_cell():
    s = load("single")
    g1 = build_g1(s, structure_table(s))
    assert len(g1.locations) == 1
    assert {t.event for t in g1.transitions} == {tau_self(1, (1, 1)), tau_other((1, 1))}
    assert all(t.source == t.target for t in g1.transitions)


def test_g1_trench_in_row():
    s = load("row3")
    g1 = build_g1(s, structure_table(s))
    (g,) = tau_guard(g1, tau_self(1, (2, 1)))
    v = {hvar((1, 1)): 1, hvar((2, 1)): 0, hvar((3, 1)): 1}
    assert not eval_guard(g, v)
    v[hvar((3, 1))] = 0
    assert eval_guard(g, v)


def test_g1_centre_of_empty_grid():
    s = spec_of(3, 3, {(x, y): 1 for x in range(1, 4) for y in range(1, 4)})
    g1 = build_g1(s, structure_table(s))
    (g,) = tau_guard(g1, tau_self(1, (2, 2)))
    assert eval_guard(g, {hvar(c): 0 for c in s.cells})


def test_g2_guards():
    s = spec_of(2, 1, {(1, 1): 3, (2, 1): 1})
    table = structure_table(s)
    tall = build_g2_cell(s, table, (1, 1))
    stay = [t for t in tall.transitions if t.event == tau_self(1, (1, 1)) and t.target == t.source]
    fill = [t for t in tall.transitions if t.event == tau_self(1, (1, 1)) and t.target != t.source]
    assert eval_guard(stay[0].guard, {hvar((1, 1)): 1})
    assert not eval_guard(fill[0].guard, {hvar((1, 1)): 1})
    assert eval_guard(fill[0].guard, {hvar((1, 1)): 2})
    low = build_g2_cell(s, table, (2, 1))
    for t in low.transitions:
        if t.target == t.source:  # g_c is h < 0: never satisfiable
            assert not any(eval_guard(t.guard, {hvar((2, 1)): h}) for h in range(0, 2))
    full = [q for q in low.locations if q in low.marked]
    assert not [t for t in low.transitions if t.source in full]


def test_g2_marks_only_the_target():
    s = spec_of(2, 1, {(1, 1): 2, (2, 1): 1})
    table = structure_table(s)
    f = flatten(compose([build_g1(s, table), build_g2(s, table)]))
    marked = {tuple(f.valuations[m]) for m in f.marked}
    assert marked == {(2, 1)}


# -- T_i -----------------------------------------------------------------


def test_single_cell_structure_automaton():
    t = build_structure_automaton(load("single"))
    assert len(t.states) == 2 and t.n_transitions == 2


def test_pair_all_states():
    # both cells enterable, so either may be laid first from outside
    t = build_structure_automaton(spec_of(2, 1, {(1, 1): 1, (2, 1): 1}, [(1, 1), (2, 1)]))
    assert {t.valuations[s] for s in t.states} == {(0, 0), (1, 0), (0, 1), (1, 1)}


def test_row_excludes_ends_first():
    t = build_structure_automaton(load("row3"))
    vals = {t.valuations[s] for s in t.states}
    assert (1, 0, 1) not in vals
    assert {(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)} == vals
    # (1,0,1) is reachable, it just cannot be finished
    _, reach, _ = structure_graph(3, 1, [(1, 1)], load("row3").target)
    assert (1, 0, 1) in reach


def test_isolated_centre_is_unreachable():
    with pytest.raises(UnreachableTargetError, match="unreachable"):
        build_structure_automaton(load("isolated"))


def check_against_oracle(spec):
    target = {c: spec.target[c] for c in spec.cells}
    cells, states, good = coaccessible_heights(spec.width, spec.height, spec.io, target)
    goal = tuple(target[c] for c in cells)
    if goal not in good:
        with pytest.raises(UnreachableTargetError):
            build_structure_automaton(spec)
        return
    t = build_structure_automaton(spec)
    got = {}
    for s in t.states:
        got[t.valuations[s]] = s
    assert set(got) == good
    assert is_nonblocking(t)
    _, _, edges = structure_graph(spec.width, spec.height, spec.io, target)
    want = {(a, c, b) for a, c, b in edges if a in good and b in good}
    seen = set()
    for s, e, u in t.transitions():
        assert isinstance(e, Unload)
        h = heights_of(t, s, spec)
        assert h[e.cell] < spec.target[e.cell]
        assert not trench(h, e.cell)
        after = heights_of(t, u, spec)
        diff = {c for c in spec.task_cells if after[c] != h[c]}
        assert diff == {e.cell} and after[e.cell] == h[e.cell] + 1
        twin = tau_other(e.cell) if e.owner == "self" else tau_self(1, e.cell)
        assert t.step(s, twin) == u
        seen.add((t.valuations[s], e.cell, t.valuations[u]))
    assert seen == want


@pytest.mark.parametrize("name", ["single", "row3", "trap", "square", "two_io", "ring", "step2"])
def test_suite_structures_match_oracle(name):
    check_against_oracle(load(name))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_small_grids_match_oracle(seed):
    rng = random.Random(seed)
    grids = list(all_grids(2, 2, 2))
    w, d, target = rng.choice(grids)
    io = rng.sample(sorted(target), rng.randint(1, min(2, len(target))))
    if not any(target.values()):
        return
    check_against_oracle(StructureSpec(w, d, target, tuple(io)))

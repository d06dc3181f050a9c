import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from brickbot.efa import (ExtendedAutomaton, Transition, VariableTable, apply_actions, compose,
                          flatten, increment)
from brickbot.errors import ModelError, ParseError, ResourceLimitError
from brickbot.events import tau_other, tau_self
from brickbot.explicit import (ExplicitAutomaton, from_text, is_nonblocking, sync_product, to_text,
                               trim)
from brickbot.guards import (FALSE, TRUE, And, Cmp, Const, Not, Or, Var, Xor, compile_guard, eq,
                             eval_guard, variables_read)
from brickbot.robot import build_robot
from brickbot.structure import (StructureSpec, build_g1, build_g2, build_structure_automaton,
                                guard_level_neighbor, hvar, structure_table)
from conftest import load, to_efa, to_table
from oracles import explicit_language, product_language, random_pair

ONE = StructureSpec(1, 1, {(1, 1): 1}, ((1, 1),))


def chain(marked):
    """s0 -> s1 -> s2 on events a, b."""
    return ExplicitAutomaton([0, 1, 2], 0, marked, {0: {"a": 1}, 1: {"b": 2}}, ["a", "b"])


def isomorphic(f, g):
    if f.is_empty or g.is_empty:
        return f.is_empty and g.is_empty
    m = {f.initial: g.initial}
    queue = deque([f.initial])
    while queue:
        s = queue.popleft()
        if (s in f.marked) != (m[s] in g.marked) or set(f.out(s)) != set(g.out(m[s])):
            return False
        for e, t in f.out(s).items():
            u = g.out(m[s])[e]
            if t in m:
                if m[t] != u:
                    return False
            else:
                m[t] = u
                queue.append(t)
    return len(m) == len(f.states) == len(g.states) and len(set(m.values())) == len(m)


# -- guards --------------------------------------------------------------


def test_true_guard():
    assert eval_guard(TRUE, {}) is True
    assert eval_guard(TRUE, {"x": 3}) is True


def test_direct_comparison():
    assert eval_guard(eq(Var("h(1,1)"), 0), {"h(1,1)": 0})


def test_level_neighbour_from_outside():
    table = structure_table(ONE)
    g = guard_level_neighbor(ONE, (1, 1))
    assert eval_guard(g, {hvar((1, 1)): 0})
    assert compile_guard(g, table.index)(table.initial())


def test_undeclared_variable_rejected_at_build():
    table = VariableTable([("x", 0, 1, 0)])
    with pytest.raises(ModelError):
        ExtendedAutomaton("bad", table, ["q"], "q", ["q"],
                          [Transition("q", "a", eq(Var("y"), 0), (), "q")])
    with pytest.raises(ModelError):
        compile_guard(eq(Var("y"), 0), table.index)


def guards(depth=3):
    leaf = st.one_of(
        st.just(TRUE), st.just(FALSE),
        st.builds(Cmp, st.sampled_from(["=", "!=", "<", "<=", ">", ">="]),
                  st.sampled_from([Var("x"), Var("y")]), st.integers(-1, 3).map(Const)))
    return st.recursive(leaf, lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(Xor, sub, sub),
        st.lists(sub, min_size=1, max_size=3).map(lambda a: And(tuple(a))),
        st.lists(sub, min_size=1, max_size=3).map(lambda a: Or(tuple(a)))), max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(guards(), st.integers(0, 2), st.integers(0, 2))
def test_compiled_guard_matches_tree_walk(g, x, y):
    index = {"x": 0, "y": 1}
    assert compile_guard(g, index)((x, y)) == eval_guard(g, {"x": x, "y": y})
    assert variables_read(g) <= {"x", "y"}


# -- actions -------------------------------------------------------------


def test_increment_and_empty_actions():
    table = VariableTable([("h", 0, 2, 0)])
    assert apply_actions([increment("h")], {"h": 0}, table) == {"h": 1}
    assert apply_actions([], {"h": 2}, table) == {"h": 2}
    assert apply_actions([increment("h")], {"h": 2}, table) is None


@given(st.integers(0, 3), st.integers(-3, 3), st.integers(0, 5))
def test_actions_never_leave_domain(start, by, const):
    table = VariableTable([("v", 0, 3, 0)])
    from brickbot.efa import assign_const
    for acts in ([increment("v", by)], [assign_const("v", const)],
                 [increment("v", by), increment("v", by)]):
        out = apply_actions(acts, {"v": start}, table)
        assert out is None or 0 <= out["v"] <= 3


# -- compose / flatten ---------------------------------------------------


def test_disjoint_alphabets_shuffle():
    table = VariableTable()
    a = ExtendedAutomaton("A", table, ["a0", "a1"], "a0", ["a0"],
                          [Transition("a0", "x", TRUE, (), "a1"), Transition("a1", "x", TRUE, (), "a0")])
    b = ExtendedAutomaton("B", table, ["b0", "b1", "b2"], "b0", ["b0"],
                          [Transition("b0", "y", TRUE, (), "b1"), Transition("b1", "y", TRUE, (), "b2"),
                           Transition("b2", "y", TRUE, (), "b0")])
    c = compose([a, b])
    assert len(list(c.locations)) == 6
    assert len(flatten(c).states) == 6


def test_g1_g2_guards_conjoined():
    table = structure_table(ONE)
    c = compose([build_g1(ONE, table), build_g2(ONE, table)])
    ts = [t for t in c.transitions_from(c.initial) if t.event == tau_self(1, (1, 1))]
    # G2 contributes an unsatisfiable stay-open loop and the marking edge
    live = [t for t in ts if eval_guard(t.guard, {hvar((1, 1)): 0})]
    assert len(live) == 1 and live[0].target == ("g1", "full")
    g = live[0].guard
    assert variables_read(g) == {hvar((1, 1))}
    assert isinstance(g, And) and len(g.args) >= 2
    assert not eval_guard(g, {hvar((1, 1)): 1})


def test_neutral_selfloop_component():
    rng = random.Random(7)
    variables, a, _ = random_pair(rng)
    table = to_table(variables)
    efa = to_efa(a, table)
    loop = ExtendedAutomaton("N", table, ["n"], "n", ["n"],
                             [Transition("n", e, TRUE, (), "n") for e in a["alphabet"]],
                             alphabet=a["alphabet"])
    assert explicit_language(flatten(compose([efa, loop])), 6) == explicit_language(flatten(efa), 6)


def test_single_selfloop_flattens_to_one_state():
    table = VariableTable()
    efa = ExtendedAutomaton("L", table, ["q"], "q", ["q"], [Transition("q", "a", TRUE, (), "q")])
    f = flatten(efa)
    assert len(f.states) == 1 and f.n_transitions == 1


def test_structure_1x1_two_states():
    table = structure_table(ONE)
    f = flatten(compose([build_g1(ONE, table), build_g2(ONE, table)]))
    assert len(f.states) == 2
    assert dict(f.out(f.initial)).keys() == {tau_self(1, (1, 1)), tau_other((1, 1))}
    assert len(set(f.out(f.initial).values())) == 1


def test_robot_position_matches_history():
    table = structure_table(ONE)
    r = build_robot(ONE, 1, table)
    f = flatten(r)
    frontier = [(f.initial, (0, 0))]
    for _ in range(6):
        nxt = []
        for s, pos in frontier:
            lab = f.label(s)
            assert (lab["xpos[1]"], lab["ypos[1]"]) == pos
            for e, t in f.out(s).items():
                if getattr(e, "kind", None) == "in":
                    p = e.cell
                elif getattr(e, "kind", None) == "out":
                    p = (0, 0)
                elif getattr(e, "kind", None) in ("e", "w", "n", "s"):
                    dx, dy = {"e": (1, 0), "w": (-1, 0), "s": (0, 1), "n": (0, -1)}[e.kind]
                    p = (pos[0] + dx, pos[1] + dy)
                else:
                    p = pos
                nxt.append((t, p))
        frontier = nxt


def test_write_conflict_rejected():
    table = VariableTable([("v", 0, 3, 0)])
    a = ExtendedAutomaton("A", table, ["q"], "q", ["q"], [Transition("q", "x", TRUE, (increment("v"),), "q")])
    b = ExtendedAutomaton("B", table, ["r"], "r", ["r"], [Transition("r", "x", TRUE, (increment("v"),), "r")])
    with pytest.raises(ModelError, match="write conflict"):
        compose([a, b])


def test_nondeterminism_rejected():
    table = VariableTable()
    efa = ExtendedAutomaton("D", table, ["p", "q"], "p", ["p"],
                            [Transition("p", "a", TRUE, (), "p"), Transition("p", "a", TRUE, (), "q")])
    with pytest.raises(ModelError, match="nondeterministic"):
        flatten(efa)


def test_state_cap():
    spec = load("row3")
    table = structure_table(spec)
    with pytest.raises(ResourceLimitError) as info:
        flatten(compose([build_g1(spec, table), build_g2(spec, table)]), state_cap=3)
    assert info.value.cap == 3 and "3" in str(info.value)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_product_matches_interleaving_oracle(seed):
    variables, a, b = random_pair(random.Random(seed))
    table = to_table(variables)
    f = flatten(compose([to_efa(a, table), to_efa(b, table)]))
    assert explicit_language(f, 6) == product_language(variables, [a, b], 6)
    for s in f.states:  # deterministic by construction of the delta map
        assert len(f.out(s)) == len(set(f.out(s)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_flatten_commutes_with_product_without_shared_variables(seed):
    rng = random.Random(seed)
    variables, a, b = random_pair(rng)
    # give each side private variables only
    for desc, tag in ((a, "A"), (b, "B")):
        desc["transitions"] = [(s, e, ("true",), (), t) for s, e, _, _, t in desc["transitions"]]
    table = to_table(variables)
    ea, eb = to_efa(a, table), to_efa(b, table)
    joint = flatten(compose([ea, eb]))
    sep = sync_product([flatten(ea), flatten(eb)])
    if len(joint.states) <= 200:
        assert isomorphic(joint, sep)


# -- trim / nonblocking --------------------------------------------------


def test_unreachable_marked_state_removed():
    f = ExplicitAutomaton([0, 1, 2], 0, [0, 2], {0: {"a": 0}}, ["a"])
    assert trim(f).states == {0}


def test_trim_fixpoint_and_chain():
    f = chain([2])
    assert trim(f).states == f.states
    g = chain([1])
    assert trim(g).states == {0, 1}
    assert not is_nonblocking(g)
    assert is_nonblocking(f)


def test_nonblocking_edge_cases():
    assert is_nonblocking(ExplicitAutomaton([0], 0, [0], {}, []))
    assert not is_nonblocking(ExplicitAutomaton.empty())
    assert trim(chain([])).is_empty


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_trim_idempotent(seed):
    variables, a, b = random_pair(random.Random(seed))
    table = to_table(variables)
    f = flatten(compose([to_efa(a, table), to_efa(b, table)]))
    t = trim(f)
    assert trim(t).same_as(t)
    assert t.is_empty or is_nonblocking(t)


# -- text format ---------------------------------------------------------


@pytest.mark.parametrize("name", ["single", "row3", "trap", "square"])
def test_text_round_trip(name):
    t = build_structure_automaton(load(name))
    text = to_text(t)
    back = from_text(text)
    assert to_text(back) == text


def test_text_rejects_garbage():
    with pytest.raises(ParseError):
        from_text("trans 0 tau[1](1,1) 1\n")
    with pytest.raises(ParseError) as info:
        from_text("states 1 initial 0 alphabet tau[1](1,1)\ntrans 0 bogus 0\n")
    assert info.value.line == 2

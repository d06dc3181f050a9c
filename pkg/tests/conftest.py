import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from brickbot.efa import Assign, ExtendedAutomaton, Transition, VariableTable  # noqa: E402
from brickbot.guards import TRUE, And, Cmp, Const, Not, Or, Var, Xor  # noqa: E402
from brickbot.structure import parse_structure  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
STRUCTURES = ROOT / "structures"
GOLDEN = Path(__file__).parent / "golden"


def load(name):
    return parse_structure((STRUCTURES / f"{name}.txt").read_text(encoding="utf-8"))


def to_guard(g):
    tag = g[0]
    if tag == "true":
        return TRUE
    if tag == "cmp":
        return Cmp(g[1], Var(g[2]), Const(g[3]))
    if tag == "not":
        return Not(to_guard(g[1]))
    if tag == "xor":
        return Xor(to_guard(g[1]), to_guard(g[2]))
    return (And if tag == "and" else Or)((to_guard(g[1]), to_guard(g[2])))


def to_efa(desc, table):
    return ExtendedAutomaton(
        desc["name"], table, desc["locations"], desc["initial"], desc["marked"],
        [Transition(s, e, to_guard(g), tuple(Assign(*a) for a in acts), t)
         for s, e, g, acts, t in desc["transitions"]],
        alphabet=desc["alphabet"])


def to_table(variables):
    return VariableTable(variables)


@pytest.fixture(scope="session")
def synthesized():
    """Memoised supervisors by structure name."""
    from brickbot.synthesis import synthesize
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = synthesize(load(name), 1)
        return cache[name]
    return get

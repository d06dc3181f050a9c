"""Guard expressions over finite-domain integer variables.

Guards are small immutable trees.  :func:`eval_guard` interprets a tree
against a name->value mapping; :func:`compile_guard` turns it into a
Python closure over a positional valuation tuple, which is what the
explicit-state expansion uses in its inner loop.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Tuple

from .errors import ModelError

# -- integer terms -----------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Arith:
    op: str  # "+" or "-"
    left: object
    right: object


# -- boolean formulas --------------------------------------------------------


@dataclass(frozen=True)
class BoolConst:
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class Cmp:
    op: str  # one of CMP_OPS
    left: object
    right: object


@dataclass(frozen=True)
class And:
    args: Tuple


@dataclass(frozen=True)
class Or:
    args: Tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Xor:
    left: object
    right: object


CMP_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_PY_CMP = {"=": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def _term(t):
    if isinstance(t, (Const, Var, Arith)):
        return t
    if isinstance(t, bool):
        raise TypeError("booleans are not integer terms")
    if isinstance(t, int):
        return Const(t)
    if isinstance(t, str):
        return Var(t)
    raise TypeError(f"not an integer term: {t!r}")


def cmp(op: str, left, right) -> Cmp:
    if op not in CMP_OPS:
        raise ValueError(f"unknown comparison {op!r}")
    return Cmp(op, _term(left), _term(right))


def eq(a, b):
    return cmp("=", a, b)


def lt(a, b):
    return cmp("<", a, b)


def le(a, b):
    return cmp("<=", a, b)


def gt(a, b):
    return cmp(">", a, b)


def add(a, b):
    return Arith("+", _term(a), _term(b))


def sub(a, b):
    return Arith("-", _term(a), _term(b))


def abs_le(a, b, bound: int):
    """``|a - b| <= bound`` without an absolute-value node."""
    return conj(le(sub(a, b), bound), le(sub(b, a), bound))


def conj(*args):
    """Conjunction with constant folding; flattens nested ANDs."""
    flat = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*args):
    flat = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(a):
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    return Not(a)


# -- analysis ----------------------------------------------------------------


def variables_read(g) -> frozenset:
    out = set()
    stack = [g]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Arith, Cmp, Xor)):
            stack.extend((node.left, node.right))
        elif isinstance(node, (And, Or)):
            stack.extend(node.args)
        elif isinstance(node, Not):
            stack.append(node.arg)
    return frozenset(out)


# -- interpretation ----------------------------------------------------------


def eval_term(t, v: Mapping[str, int]) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return v[t.name]
    if isinstance(t, Arith):
        a, b = eval_term(t.left, v), eval_term(t.right, v)
        return a + b if t.op == "+" else a - b
    raise TypeError(f"not a term: {t!r}")


def eval_guard(g, v: Mapping[str, int]) -> bool:
    if isinstance(g, BoolConst):
        return g.value
    if isinstance(g, Cmp):
        return CMP_OPS[g.op](eval_term(g.left, v), eval_term(g.right, v))
    if isinstance(g, And):
        return all(eval_guard(a, v) for a in g.args)
    if isinstance(g, Or):
        return any(eval_guard(a, v) for a in g.args)
    if isinstance(g, Not):
        return not eval_guard(g.arg, v)
    if isinstance(g, Xor):
        return eval_guard(g.left, v) != eval_guard(g.right, v)
    raise TypeError(f"not a guard: {g!r}")


# -- compilation -------------------------------------------------------------


def _src_term(t, index):
    if isinstance(t, Const):
        return repr(t.value)
    if isinstance(t, Var):
        return f"v[{index[t.name]}]"
    return f"({_src_term(t.left, index)} {t.op} {_src_term(t.right, index)})"


def _src(g, index):
    if isinstance(g, BoolConst):
        return "True" if g.value else "False"
    if isinstance(g, Cmp):
        return f"({_src_term(g.left, index)} {_PY_CMP[g.op]} {_src_term(g.right, index)})"
    if isinstance(g, And):
        return "(" + " and ".join(_src(a, index) for a in g.args) + ")"
    if isinstance(g, Or):
        return "(" + " or ".join(_src(a, index) for a in g.args) + ")"
    if isinstance(g, Not):
        return f"(not {_src(g.arg, index)})"
    if isinstance(g, Xor):
        return f"({_src(g.left, index)} != {_src(g.right, index)})"
    raise TypeError(f"not a guard: {g!r}")


def _always(v):
    return True


def compile_guard(g, index: Mapping[str, int]) -> Callable[[Sequence[int]], bool]:
    """Compile *g* against positional variable slots ``index[name]``."""
    if g == TRUE:
        return _always
    missing = variables_read(g) - set(index)
    if missing:
        raise ModelError(f"guard reads undeclared variables: {sorted(missing)}")
    return eval(f"lambda v: {_src(g, index)}", {})  # noqa: S307 - generated from a closed grammar

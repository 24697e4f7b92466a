"""Terms, conditions, assertions and path programs, plus their evaluation.

One boolean tree type is shared by all the formula languages of the tool:

* multiplex formulas use :class:`Thr` leaves (``v >= n`` on discrete levels),
* properties use :class:`Atom` leaves over :class:`Term` trees,
* assertions use :class:`CelBound` and :class:`Slide` leaves.

All nodes are frozen dataclasses, so ``==`` is structural equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

Number = Union[int, float, Fraction]

COMPARISONS = ("<", "<=", ">", ">=", "=", "!=")
NEGATED_OP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
FLIPPED_OP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}

# comparisons on floats use this slack; Fractions compare exactly
FLOAT_TOL = 1e-12


class EvalError(Exception):
    pass


# --------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Eta(Term):
    """Discrete level of a variable."""

    var: str


@dataclass(frozen=True)
class Pi(Term):
    """Fractional part of ``var`` in the discrete state with the given index.

    ``entering`` selects the entry point (written with a prime) instead of
    the exit point.
    """

    var: str
    index: int
    entering: bool = False


@dataclass(frozen=True)
class Cel(Term):
    """Celerity symbol ``C_{var, omega, level}``; omega is kept sorted."""

    var: str
    omega: tuple
    level: int

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(sorted(set(self.omega))))


@dataclass(frozen=True)
class Dur(Term):
    name: str


@dataclass(frozen=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True)
class Bin(Term):
    op: str  # one of + - * /
    lhs: Term
    rhs: Term


def add(a: Term, b: Term) -> Term:
    return Bin("+", a, b)


def sub(a: Term, b: Term) -> Term:
    return Bin("-", a, b)


def mul(a: Term, b: Term) -> Term:
    return Bin("*", a, b)


def const(x) -> Const:
    return Const(Fraction(x))


# --------------------------------------------------------------------------
# Conditions


class Cond:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Cond):
    pass


@dataclass(frozen=True)
class Bot(Cond):
    pass


TOP = Top()
BOT = Bot()


@dataclass(frozen=True)
class Atom(Cond):
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"bad comparison {self.op!r}")


@dataclass(frozen=True)
class Thr(Cond):
    """Multiplex atom ``var >= level``."""

    var: str
    level: int


@dataclass(frozen=True)
class CelBound(Cond):
    """Assertion atom ``C_var op value`` on the active celerity of ``var``."""

    var: str
    op: str
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Slide(Cond):
    """``slide(var)``; direction is "", "+" or "-"."""

    var: str
    direction: str = ""


@dataclass(frozen=True)
class Not(Cond):
    arg: Cond


@dataclass(frozen=True)
class And(Cond):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Or(Cond):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Implies(Cond):
    lhs: Cond
    rhs: Cond


def conj(*parts: Cond) -> Cond:
    parts = tuple(p for p in parts if p != TOP)
    if not parts:
        return TOP
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(*parts: Cond) -> Cond:
    parts = tuple(p for p in parts if p != BOT)
    if not parts:
        return BOT
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def eq(a: Term, b: Term) -> Atom:
    return Atom("=", a, b)


# --------------------------------------------------------------------------
# Properties, assertions and paths


@dataclass(frozen=True)
class Property:
    """Pre/postcondition: discrete condition ``d`` and hybrid condition ``h``."""

    d: Cond = TOP
    h: Cond = TOP


@dataclass(frozen=True)
class PathAtom:
    duration: Term  # Const or Dur
    assertion: Cond
    var: str
    sign: int  # +1 for v+, -1 for v-

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("path atom sign must be +1 or -1")
        if not isinstance(self.duration, (Const, Dur)):
            raise ValueError("duration must be a constant or a duration symbol")
        if isinstance(self.duration, Const) and self.duration.value < 0:
            raise ValueError("negative duration")


@dataclass(frozen=True)
class HoareTriple:
    path: tuple
    post: Property
    pre: Property | None = None
    cycle: bool = False
    name: str = "triple"

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))


# --------------------------------------------------------------------------
# Traversal helpers


def children(node) -> tuple:
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, Implies):
        return (node.lhs, node.rhs)
    if isinstance(node, Atom):
        return (node.lhs, node.rhs)
    if isinstance(node, Neg):
        return (node.arg,)
    if isinstance(node, Bin):
        return (node.lhs, node.rhs)
    return ()


def walk(node) -> Iterator:
    yield node
    for c in children(node):
        yield from walk(c)


SYMBOL_TYPES = (Eta, Pi, Cel, Dur)


def symbols(node) -> set:
    return {n for n in walk(node) if isinstance(n, SYMBOL_TYPES)}


def is_discrete_term(t: Term) -> bool:
    return all(not isinstance(n, (Pi, Cel, Dur)) for n in walk(t))


def is_discrete(c: Cond) -> bool:
    """True iff every atom in ``c`` is a discrete atom (only eta and numbers)."""
    for n in walk(c):
        if isinstance(n, Atom) and not (is_discrete_term(n.lhs) and is_discrete_term(n.rhs)):
            return False
        if isinstance(n, (CelBound, Slide)):
            return False
    return True


def substitute(node, mapping: Mapping):
    """Replace every sub-node equal to a key of ``mapping`` by its value."""
    if node in mapping:
        return mapping[node]
    if isinstance(node, Atom):
        return Atom(node.op, substitute(node.lhs, mapping), substitute(node.rhs, mapping))
    if isinstance(node, Bin):
        return Bin(node.op, substitute(node.lhs, mapping), substitute(node.rhs, mapping))
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Not):
        return Not(substitute(node.arg, mapping))
    if isinstance(node, And):
        return And(tuple(substitute(a, mapping) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(substitute(a, mapping) for a in node.args))
    if isinstance(node, Implies):
        return Implies(substitute(node.lhs, mapping), substitute(node.rhs, mapping))
    return node


def map_leaves(c: Cond, fn) -> Cond:
    """Rebuild ``c`` with every non-connective leaf replaced by ``fn(leaf)``."""
    if isinstance(c, Not):
        return Not(map_leaves(c.arg, fn))
    if isinstance(c, And):
        return And(tuple(map_leaves(a, fn) for a in c.args))
    if isinstance(c, Or):
        return Or(tuple(map_leaves(a, fn) for a in c.args))
    if isinstance(c, Implies):
        return Implies(map_leaves(c.lhs, fn), map_leaves(c.rhs, fn))
    if isinstance(c, (Top, Bot)):
        return c
    return fn(c)


def thr_to_atom(c: Cond) -> Cond:
    """Lower multiplex ``v >= n`` leaves to discrete atoms on eta."""
    return map_leaves(c, lambda a: Atom(">=", Eta(a.var), Const(a.level)) if isinstance(a, Thr) else a)


# --------------------------------------------------------------------------
# Evaluation


def eval_term(t: Term, env: Mapping):
    if isinstance(t, Const):
        return t.value
    if isinstance(t, SYMBOL_TYPES):
        try:
            return env[t]
        except KeyError:
            raise EvalError(f"unbound symbol {t}") from None
    if isinstance(t, Neg):
        return -eval_term(t.arg, env)
    if isinstance(t, Bin):
        a = eval_term(t.lhs, env)
        b = eval_term(t.rhs, env)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if t.op == "*":
            return a * b
        if b == 0:
            raise EvalError("division by zero")
        return a / b
    raise TypeError(f"not a term: {t!r}")


def compare(op: str, a, b) -> bool:
    tol = FLOAT_TOL if isinstance(a, float) or isinstance(b, float) else 0
    if tol and not (math.isinf(a) or math.isinf(b)):
        diff = a - b
        if op == "=":
            return abs(diff) <= tol
        if op == "!=":
            return abs(diff) > tol
        if op == "<":
            return diff < -tol
        if op == "<=":
            return diff <= tol
        if op == ">":
            return diff > tol
        return diff >= -tol
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def eval_cond(c: Cond, env: Mapping) -> bool:
    """Evaluate a condition; ``env`` maps symbols (Eta, Pi, Cel, Dur) to numbers."""
    if isinstance(c, Top):
        return True
    if isinstance(c, Bot):
        return False
    if isinstance(c, Atom):
        return compare(c.op, eval_term(c.lhs, env), eval_term(c.rhs, env))
    if isinstance(c, Thr):
        return eval_term(Eta(c.var), env) >= c.level
    if isinstance(c, Not):
        return not eval_cond(c.arg, env)
    if isinstance(c, And):
        return all(eval_cond(a, env) for a in c.args)
    if isinstance(c, Or):
        return any(eval_cond(a, env) for a in c.args)
    if isinstance(c, Implies):
        return (not eval_cond(c.lhs, env)) or eval_cond(c.rhs, env)
    raise EvalError(f"cannot evaluate {type(c).__name__} outside a transition")


def state_env(eta: Mapping, pi: Mapping | None = None, index: int = 0, entering: bool = True) -> dict:
    """Symbol environment for a hybrid state.

    Levels bind ``Eta``; fractional parts bind ``Pi(v, index, entering)``.
    """
    env = {Eta(v): n for v, n in eta.items()}
    for v, x in (pi or {}).items():
        env[Pi(v, index, entering)] = x
    return env


def eval_property(p: Property, eta: Mapping, pi: Mapping | None = None,
                  binding: Mapping | None = None, index: int = 0) -> bool:
    """``h |= (D, H)`` where h = (eta, pi).

    The state's fractional parts are bound as the entering parts of state
    ``index``; ``binding`` supplies every other symbol (celerities, durations,
    fractional parts of other indices).
    """
    env = dict(binding or {})
    env.update(state_env(eta, pi, index))
    return eval_cond(p.d, env) and eval_cond(p.h, env)

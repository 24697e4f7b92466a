"""Formula simplification under a discrete context.

The rewrite system, applied to a fixpoint:

R1  discrete atoms are decided by the known levels (and variable bounds);
R2  boolean folding, flattening, duplicate and complementary literals,
    unit absorption (``a & (~a | b) -> a & b`` and its dual);
R3  celerity sign atoms over one ``(v, omega)`` group that no admissible
    sign profile satisfies make their conjunction false;
R4  single-symbol equalities are solved (``1 = 1 - x`` becomes ``x = 0``).

Elimination of fractional-part variables (:func:`propagate_equalities`) is
kept separate because it only preserves the projected solution set.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .logic import (
    BOT, TOP, And, Atom, Bin, Bot, Cel, Cond, Const, Dur, Eta, EvalError, Implies, Not, Or,
    Pi, Top, compare, conj, eval_cond, symbols, substitute,
)
from .model import GRN, literals_satisfiable
from .solve import default_domain, sample_models, sampler, sign_literal, top_level_signs
from .poly import (
    constant_value, eval_poly, from_poly, is_constant, leading_coefficient, poly_symbols,
    solve_linear, sym_key, to_poly,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteContext:
    """Levels pinned by a discrete condition; ``satisfiable`` is False for a vacuous one."""

    levels: Mapping = field(default_factory=dict)
    satisfiable: bool = True


def context_from(d: Cond, grn: GRN) -> DiscreteContext:
    """Levels on which every discrete state satisfying ``d`` agrees."""
    sols = [eta for eta in grn.discrete_states()
            if eval_cond(d, {Eta(v): n for v, n in eta.items()})]
    if not sols:
        return DiscreteContext({}, False)
    levels = {v: sols[0][v] for v in grn.var_names if all(s[v] == sols[0][v] for s in sols)}
    return DiscreteContext(levels, True)


# --------------------------------------------------------------------------
# negation normal form


def _leafy(c) -> bool:
    return not isinstance(c, (And, Or, Not, Implies, Top, Bot))


def nnf(c: Cond, neg: bool = False) -> Cond:
    """Implications expanded, negations pushed down to the leaves."""
    if isinstance(c, Implies):
        return nnf(Or((Not(c.lhs), c.rhs)), neg)
    if isinstance(c, Not):
        return nnf(c.arg, not neg)
    if isinstance(c, And):
        kids = tuple(nnf(a, neg) for a in c.args)
        return Or(kids) if neg else And(kids)
    if isinstance(c, Or):
        kids = tuple(nnf(a, neg) for a in c.args)
        return And(kids) if neg else Or(kids)
    if isinstance(c, Top):
        return BOT if neg else TOP
    if isinstance(c, Bot):
        return TOP if neg else BOT
    return Not(c) if neg else c


def negate(lit: Cond) -> Cond:
    if isinstance(lit, Not):
        return lit.arg
    if isinstance(lit, Top):
        return BOT
    if isinstance(lit, Bot):
        return TOP
    return Not(lit)


def _is_literal(c) -> bool:
    return _leafy(c) or (isinstance(c, Not) and _leafy(c.arg))


# --------------------------------------------------------------------------
# leaves


def _single_level_atom(atom: Atom, p: dict, x: Eta, grn: GRN | None) -> Cond:
    if grn is not None and x.var in grn.var_names:
        b = grn.bound(x.var)
        sat = [n for n in range(b + 1) if compare(atom.op, eval_poly(p, {x: Fraction(n)}), 0)]
        if not sat:
            return BOT
        if len(sat) == b + 1:
            return TOP
        if len(sat) == 1:
            return Atom("=", x, Const(sat[0]))
    return _solved(atom, p, x)


def _solved(atom: Atom, p: dict, x) -> Cond:
    sol = solve_linear(p, x)
    if sol is None:
        return atom
    num, den = sol
    if not (is_constant(num) and is_constant(den)):
        return atom
    a = constant_value(den)
    # p = a*x - value*a, so dividing by a < 0 flips the comparison
    op = atom.op
    if a < 0:
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(op, op)
    return Atom(op, x, Const(constant_value(num) / a))


def simplify_atom(atom: Atom, levels: Mapping, grn: GRN | None) -> Cond:
    if levels:
        atom = substitute(atom, {Eta(v): Const(n) for v, n in levels.items()})
    p = to_poly(Bin("-", atom.lhs, atom.rhs))
    if p is None:
        return atom
    if is_constant(p):
        return TOP if compare(atom.op, constant_value(p), 0) else BOT
    syms = poly_symbols(p)
    if len(syms) != 1:
        return atom
    (x,) = syms
    if isinstance(x, Eta):
        return _single_level_atom(atom, p, x, grn)
    if atom.op == "=":
        return _solved(atom, p, x)
    return atom


def _default_leaf(levels, grn):
    cache = {}  # guarded generation repeats the same atoms many times

    def leaf(c):
        if not isinstance(c, Atom):
            return c
        out = cache.get(c)
        if out is None:
            out = cache[c] = simplify_atom(c, levels, grn)
        return out
    return leaf


# --------------------------------------------------------------------------
# boolean structure


def _sort_key(c) -> str:
    from .textio import render_formula
    return render_formula(c)


def _profiles_contradict(lits, grn: GRN | None) -> bool:
    if grn is None:
        return False
    groups = {}
    for cel, rel in lits:
        groups.setdefault((cel.var, cel.omega), []).append((cel.level, rel))
    for (var, _), group in groups.items():
        if var in grn.var_names and not literals_satisfiable(grn.bound(var), group):
            return True
    return False


def _junction(c, leaf, grn, is_and: bool) -> Cond:
    cls = And if is_and else Or
    unit, zero = (TOP, BOT) if is_and else (BOT, TOP)
    kids = []
    for a in c.args:
        a = _simp(a, leaf, grn)
        if isinstance(a, cls):
            kids.extend(a.args)
        else:
            kids.append(a)
    out = []
    for a in kids:
        if a == zero:
            return zero
        if a != unit and a not in out:
            out.append(a)
    lits = {a for a in out if _is_literal(a)}
    if any(negate(a) in lits for a in lits):
        return zero
    # R3: positive sign atoms in a conjunction, negated ones in a disjunction
    if is_and:
        signs = [s for s in map(sign_literal, out) if s]
    else:
        signs = [s for s in (sign_literal(a.arg) for a in out if isinstance(a, Not)) if s]
    if _profiles_contradict(signs, grn):
        return zero
    # unit absorption against sibling literals
    other = Or if is_and else And
    reduced = []
    for a in out:
        if isinstance(a, other):
            if any(b in lits for b in a.args):
                continue
            inner = tuple(b for b in a.args if negate(b) not in lits)
            if len(inner) != len(a.args):
                if not inner:
                    return zero if is_and else TOP
                a = inner[0] if len(inner) == 1 else other(inner)
        reduced.append(a)
    if not reduced:
        return unit
    if len(reduced) == 1:
        return reduced[0]
    return cls(tuple(sorted(reduced, key=_sort_key)))


def _simp(c: Cond, leaf, grn) -> Cond:
    if isinstance(c, (Top, Bot)):
        return c
    if isinstance(c, And):
        return _junction(c, leaf, grn, True)
    if isinstance(c, Or):
        return _junction(c, leaf, grn, False)
    if isinstance(c, Not):
        inner = _simp(c.arg, leaf, grn)
        return negate(inner) if _is_literal(inner) or isinstance(inner, (Top, Bot)) else nnf(Not(inner))
    return leaf(c)


def _fixpoint(f: Cond, leaf, grn, limit: int = 100) -> Cond:
    cur = nnf(f)
    for _ in range(limit):
        nxt = _simp(cur, leaf, grn)
        if nxt == cur:
            return cur
        cur = nxt
    log.warning("simplification did not reach a fixpoint in %d passes", limit)
    return cur


def simplify(f: Cond, ctx: DiscreteContext | Mapping | None = None, grn: GRN | None = None) -> Cond:
    """Simplify ``f``; the result is equivalent to ``f`` for all states agreeing with ``ctx``."""
    levels = ctx.levels if isinstance(ctx, DiscreteContext) else dict(ctx or {})
    return _fixpoint(f, _default_leaf(levels, grn), grn)


# --------------------------------------------------------------------------
# equality propagation


def _occurs(x, nodes) -> bool:
    return any(x in symbols(n) for n in nodes)


def _pick_definition(conjuncts: list):
    # constant pins first, so border values win over junction equalities
    for i, c in enumerate(conjuncts):
        if isinstance(c, Atom) and c.op == "=" and isinstance(c.rhs, Const):
            x = c.lhs
            if isinstance(x, Pi) and not x.entering:
                return i, x, c.rhs
            if isinstance(x, (Pi, Cel, Dur)) and _occurs(x, conjuncts[:i] + conjuncts[i + 1:]):
                return i, x, c.rhs
    for i, c in enumerate(conjuncts):
        if not (isinstance(c, Atom) and c.op == "="):
            continue
        for x, e in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
            if isinstance(x, Pi) and not x.entering:
                if x in symbols(e):
                    log.warning("cyclic definition left in place: %s", _sort_key(c))
                    continue
                return i, x, e
    return None


def propagate_equalities(f: Cond, ctx=None, grn: GRN | None = None) -> Cond:
    """Eliminate exiting fractional parts and constant-pinned symbols.

    Each step takes a top-level conjunct ``x = e`` (exiting ``pi[u,k]``, or a
    symbol pinned to a constant that also occurs elsewhere), substitutes ``e``
    for ``x`` in the other conjuncts and drops the definition.  Entering
    fractional parts, celerities and durations are the surviving variables.
    """
    f = simplify(f, ctx, grn)
    for _ in range(10_000):
        conjuncts = list(f.args) if isinstance(f, And) else [f]
        choice = _pick_definition(conjuncts)
        if choice is None:
            return f
        i, x, e = choice
        rest = conjuncts[:i] + conjuncts[i + 1:]
        f = simplify(conj(*(substitute(c, {x: e}) for c in rest)), ctx, grn)
    return f


# --------------------------------------------------------------------------
# canonical form


def _normal_atom(atom: Atom, negated: bool) -> Cond:
    op = atom.op
    if negated:
        op = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}[op]
    p = to_poly(Bin("-", atom.lhs, atom.rhs))
    if p is None:
        a = Atom(op, atom.lhs, atom.rhs)
        return a
    if is_constant(p):
        return TOP if compare(op, constant_value(p), 0) else BOT
    if op in (">", ">="):
        p = {m: -c for m, c in p.items()}
        op = "<" if op == ">" else "<="
    lc = leading_coefficient(p)
    scale = abs(lc) if op in ("<", "<=") else lc
    p = {m: c / scale for m, c in p.items()}
    return Atom(op, from_poly(p), Const(0))


def canonicalize(f: Cond, ctx=None, grn: GRN | None = None) -> Cond:
    """Simplify, then normalise every atom to ``poly op 0`` with op in {<, <=, =, !=}.

    Two formulas that differ only in atom orientation, arithmetic layout or
    conjunct order have the same canonical form.
    """
    f = simplify(f, ctx, grn)

    def leaf(c):
        if isinstance(c, Atom):
            return _normal_atom(c, False)
        return c

    def canon(c):
        if isinstance(c, Not) and isinstance(c.arg, Atom):
            return _normal_atom(c.arg, True)
        if isinstance(c, (And, Or)):
            return type(c)(tuple(canon(a) for a in c.args))
        if isinstance(c, Not):
            return Not(canon(c.arg))
        return leaf(c)

    return _fixpoint(canon(nnf(f)), leaf, grn)


# --------------------------------------------------------------------------
# sampled equivalence


@dataclass
class EquivalenceVerdict:
    status: str  # equivalent | counterexample | inconclusive
    witness: dict | None = None
    checked: int = 0


def equivalent_sampled(f1: Cond, f2: Cond, domains: Mapping | None = None, n: int = 10_000,
                       seed: int = 0, grn: GRN | None = None) -> EquivalenceVerdict:
    """Compare two formulas on seeded random valuations.

    Besides ``n`` random points (half of them drawn with the celerity signs
    that either formula fixes at top level), every 0/1 combination of the
    fractional-part symbols is tried, and so are models of each formula
    obtained by solved-form sampling, since random points rarely hit
    equality constraints.
    """
    syms = sorted(symbols(f1) | symbols(f2), key=sym_key)
    plain = {s: (domains or {}).get(s) or default_domain(s, grn) for s in syms}
    signs = {**top_level_signs(f2), **top_level_signs(f1)}
    signed = {s: d.with_sign(signs[s]) if s in signs and not d.sign else d for s, d in plain.items()}
    rng = random.Random(seed)
    checked = 0

    def check(env):
        nonlocal checked
        try:
            a = eval_cond(f1, env)
            b = eval_cond(f2, env)
        except EvalError:
            return None
        checked += 1
        if a != b:
            return EquivalenceVerdict("counterexample", dict(env), checked)
        return None

    draws = {True: [(s, sampler(signed[s])) for s in syms],
             False: [(s, sampler(plain[s])) for s in syms]}

    def random_env(use_signs):
        return {s: one(rng) for s, one in draws[use_signs]}

    for k in range(n):
        v = check(random_env(k % 2 == 0))
        if v:
            return v
    pis = [s for s in syms if isinstance(s, Pi)][:12]
    for mask in range(1 << len(pis)):
        env = random_env(True)
        for j, s in enumerate(pis):
            env[s] = Fraction((mask >> j) & 1)
        v = check(env)
        if v:
            return v
    for f in (f1, f2):
        models, _ = sample_models(f, plain, max(1, min(n // 100, 100)), seed, max_proposals=5_000, grn=grn)
        for m in models:
            env = random_env(True)
            env.update(m)
            v = check(env)
            if v:
                return v
    return EquivalenceVerdict("equivalent" if checked else "inconclusive", None, checked)

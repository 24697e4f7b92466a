"""Weakest preconditions along path programs.

Each path atom ``(dt, a, v±)`` read backwards turns a postcondition about
state ``f`` into a precondition about a fresh state ``i``.  The hybrid part
is the conjunction of six generated pieces:

* ``Phi``: v reaches its border at time dt and the active celerity has the
  right sign,
* ``F``: every other variable either has not crossed its own border by then
  or is stopped by a wall,
* ``not W``: v itself is not stopped by a wall,
* ``A``: the step assertion,
* ``Rep``: the exit point of state i is the entry point of state f, with
  v's fractional part reflected,

plus the postcondition itself.  Generators always emit the fully guarded
form (one implication per resource set and level); the simplifier then
removes whatever the discrete context rules out.

Fractional parts are indexed by state.  ``Pi(u, k)`` is where u leaves
state k and ``Pi(u, k, entering=True)`` is where it entered it.  The
postcondition's state has index 0 and every backward step allocates the
next integer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .logic import (
    TOP, Atom, Bin, Cel, CelBound, Cond, Const, Eta, Implies, Not, PathAtom,
    Pi, Property, Slide, Top, conj, disj, eq, map_leaves, mul, sub, substitute, symbols,
)
from .model import GRN, ModelError, resource_formula
from .simplify import context_from, propagate_equalities, simplify

log = logging.getLogger(__name__)


class WPError(ValueError):
    pass


@dataclass
class StateIndexContext:
    """Indices of the exiting (``i``) and entered (``f``) states of one step.

    ``levels`` holds the discrete levels of state i that the running
    discrete condition pins down.
    """

    f: int
    i: int
    levels: dict = field(default_factory=dict)
    satisfiable: bool = True


@dataclass
class WPStep:
    atom: PathAtom
    index: int
    d: Cond
    h: Cond


@dataclass
class WPResult:
    property: Property
    post: Property
    steps: list = field(default_factory=list)
    inventory: set = field(default_factory=set)
    start_index: int = 0
    final_index: int = 0
    warnings: list = field(default_factory=list)


def _ctx_levels(ctx) -> dict:
    if ctx is None:
        return {}
    return dict(ctx.levels)


def _guard(grn: GRN, v: str, omega, n=None, shift: int = 0) -> Cond:
    phi = resource_formula(grn, v, omega)
    if shift:
        phi = substitute(phi, {Eta(v): Bin("+", Eta(v), Const(shift))})
    return phi if n is None else conj(eq(Eta(v), Const(n)), phi)


def _guarded(grn: GRN, v: str, body) -> list:
    """``(eta_v = n and Phi_v^omega) => body(C_{v,omega,n})`` for every omega, n."""
    out = []
    for omega in grn.omegas(v):
        for n in range(grn.bound(v) + 1):
            out.append(Implies(_guard(grn, v, omega, n), body(Cel(v, omega, n))))
    return out


def _rel(sign: int) -> str:
    return ">" if sign > 0 else "<"


def _border(sign: int) -> Const:
    return Const(1 if sign > 0 else 0)


def _target(u: str, i: int, c: Cel, dt) -> Bin:
    # where the fractional part would be after dt at celerity c, read backwards
    return sub(Pi(u, i), mul(c, dt))


def _sign(direction) -> int:
    if direction in ("+", 1):
        return 1
    if direction in ("-", "−", -1):
        return -1
    raise ValueError(f"bad direction {direction!r}")


# --------------------------------------------------------------------------
# sub-formula generators


def sub_phi(grn: GRN, ctx: StateIndexContext, v: str, direction, dt, *, reduce: bool = True) -> Cond:
    """v sits on its exit border at the end of the step, moving towards it."""
    s = _sign(direction)
    grn.var(v)
    i = ctx.i
    parts = [eq(Pi(v, i), _border(s))]
    parts += _guarded(grn, v, lambda c: conj(
        Atom(_rel(s), c, Const(0)),
        eq(Pi(v, i, True), _target(v, i, c, dt)),
    ))
    f = conj(*parts)
    return simplify(f, _ctx_levels(ctx), grn) if reduce else f


def external_wall(grn: GRN, u: str, direction) -> Cond:
    s = _sign(direction)
    b = grn.bound(u)
    level = b if s > 0 else 0
    parts = [eq(Eta(u), Const(level))]
    for omega in grn.omegas(u):
        parts.append(Implies(_guard(grn, u, omega), Atom(_rel(s), Cel(u, omega, level), Const(0))))
    return conj(*parts)


def shifted_resources(grn: GRN, u: str, omega, direction) -> Cond:
    """Resources of u would be ``omega`` one level further in ``direction``."""
    s = _sign(direction)
    b = grn.bound(u)
    room = Atom("<", Eta(u), Const(b)) if s > 0 else Atom(">", Eta(u), Const(0))
    parts = [room]
    for n in range(b + 1):
        parts.append(Implies(eq(Eta(u), Const(n)), _guard(grn, u, omega, shift=s)))
    return conj(*parts)


def internal_wall(grn: GRN, u: str, direction) -> Cond:
    s = _sign(direction)
    b = grn.bound(u)
    room = Atom("<", Eta(u), Const(b)) if s > 0 else Atom(">", Eta(u), Const(0))
    levels = range(0, b) if s > 0 else range(1, b + 1)
    parts = [room]
    for omega in grn.omegas(u):
        for omega2 in grn.omegas(u):
            for n in levels:
                premise = conj(eq(Eta(u), Const(n)), _guard(grn, u, omega),
                               shifted_resources(grn, u, omega2, s))
                parts.append(Implies(premise, conj(
                    Atom(_rel(s), Cel(u, omega, n), Const(0)),
                    Atom(_rel(-s), Cel(u, omega2, n + s), Const(0)),
                )))
    return conj(*parts)


def sub_wall(grn: GRN, ctx: StateIndexContext, u: str, direction, *, reduce: bool = True) -> Cond:
    """A wall stops u at its border in ``direction`` (external or internal)."""
    grn.var(u)
    f = disj(external_wall(grn, u, direction), internal_wall(grn, u, direction))
    return simplify(f, _ctx_levels(ctx), grn) if reduce else f


def sub_first(grn: GRN, ctx: StateIndexContext, v: str, dt, *, reduce: bool = True) -> Cond:
    """No other variable crosses its border before v, unless a wall holds it."""
    grn.var(v)
    i = ctx.i
    parts = []
    for u in grn.var_names:
        if u == v:
            continue
        walls = {s: sub_wall(grn, ctx, u, s, reduce=False) for s in (1, -1)}
        for omega in grn.omegas(u):
            for n in range(grn.bound(u) + 1):
                c = Cel(u, omega, n)
                for s in (1, -1):
                    premise = conj(
                        eq(Eta(u), Const(n)), _guard(grn, u, omega),
                        Atom(_rel(s), c, Const(0)),
                        Atom(_rel(s), Pi(u, i, True), _target(u, i, c, dt)),
                    )
                    parts.append(Implies(premise, walls[s]))
    f = conj(*parts)
    return simplify(f, _ctx_levels(ctx), grn) if reduce else f


def _slide(grn: GRN, i: int, u: str, s: int, dt) -> Cond:
    def moving(c):
        return Implies(Atom(_rel(s), c, Const(0)), Atom(_rel(s), Pi(u, i, True), _target(u, i, c, dt)))
    return conj(eq(Pi(u, i), _border(s)), *_guarded(grn, u, moving))


def sub_assert(grn: GRN, ctx: StateIndexContext, dt, a: Cond, *, reduce: bool = True) -> Cond:
    """Translate an assertion into constraints on the concrete symbols of state i."""
    i = ctx.i

    def leaf(x):
        if isinstance(x, CelBound):
            grn.var(x.var)
            return conj(*_guarded(grn, x.var, lambda c: Atom(x.op, c, Const(x.value))))
        if isinstance(x, Slide):
            grn.var(x.var)
            if x.direction == "+":
                return _slide(grn, i, x.var, 1, dt)
            if x.direction == "-":
                return _slide(grn, i, x.var, -1, dt)
            return disj(_slide(grn, i, x.var, 1, dt), _slide(grn, i, x.var, -1, dt))
        if isinstance(x, Top):
            return TOP
        raise WPError(f"unexpected assertion leaf {x!r}")

    f = map_leaves(a, leaf)
    return simplify(f, _ctx_levels(ctx), grn) if reduce else f


def sub_junction(grn: GRN, ctx: StateIndexContext, v: str) -> Cond:
    """Exit point of state i equals the entry point of state f; v is reflected."""
    grn.var(v)
    parts = []
    for u in grn.var_names:
        if u == v:
            parts.append(eq(Pi(u, ctx.i), sub(Const(1), Pi(u, ctx.f, True))))
        else:
            parts.append(eq(Pi(u, ctx.i), Pi(u, ctx.f, True)))
    return conj(*parts)


# --------------------------------------------------------------------------
# composition


def shift_discrete(c: Cond, v: str, sign: int) -> Cond:
    return substitute(c, {Eta(v): Bin("+", Eta(v), Const(sign))})


def wp_atom(grn: GRN, ctx: StateIndexContext, atom: PathAtom, post: Property) -> Property:
    """Precondition of one path atom; ``ctx.levels`` is refreshed from the new D.

    The discrete part is exact substitution.  A hybrid postcondition that
    mentions levels is shifted the same way, since it is read in the
    earlier state.
    """
    v, s, dt = atom.var, atom.sign, atom.duration
    grn.var(v)
    d = simplify(shift_discrete(post.d, v, s), None, grn)
    dctx = context_from(d, grn)
    ctx.levels = dict(dctx.levels)
    ctx.satisfiable = dctx.satisfiable
    if not dctx.satisfiable:
        log.warning("vacuous precondition: no discrete state satisfies the precondition of %s%s",
                    v, "+" if s > 0 else "-")
    h = conj(
        shift_discrete(post.h, v, s),
        sub_phi(grn, ctx, v, s, dt),
        sub_first(grn, ctx, v, dt),
        Not(sub_wall(grn, ctx, v, s)),
        sub_assert(grn, ctx, dt, atom.assertion),
        sub_junction(grn, ctx, v),
    )
    h = propagate_equalities(h, ctx.levels, grn)
    return Property(d, h)


def wp_path(grn: GRN, path, post: Property, start_index: int = 0) -> WPResult:
    """Fold :func:`wp_atom` over the path from right to left."""
    result = WPResult(property=post, post=post, start_index=start_index, final_index=start_index)
    result.inventory |= symbols(post.h)
    prop = post
    k = start_index
    for atom in reversed(tuple(path)):
        ctx = StateIndexContext(f=k, i=k + 1)
        try:
            prop = wp_atom(grn, ctx, atom, prop)
        except ModelError as e:
            raise WPError(str(e)) from e
        k += 1
        if not ctx.satisfiable:
            result.warnings.append(f"vacuous precondition at step {k}")
        result.steps.append(WPStep(atom, k, prop.d, prop.h))
        result.inventory |= symbols(prop.h)
    result.property = prop
    result.final_index = k
    return result


def _same_discrete(grn: GRN, d1: Cond, d2: Cond) -> bool:
    from .logic import eval_cond
    for eta in grn.discrete_states():
        env = {Eta(u): n for u, n in eta.items()}
        if eval_cond(d1, env) != eval_cond(d2, env):
            return False
    return True


def close_cycle(grn: GRN, result: WPResult) -> Property:
    """Identify the initial state with the final one (periodic trajectory)."""
    d = result.property.d
    if not _same_discrete(grn, d, result.post.d):
        raise WPError("cannot close the cycle: discrete precondition differs from the postcondition")
    n, z = result.final_index, result.start_index
    if n == z:
        return result.property
    mapping = {}
    for u in grn.var_names:
        mapping[Pi(u, n)] = Pi(u, z)
        mapping[Pi(u, n, True)] = Pi(u, z, True)
    h = substitute(result.property.h, mapping)
    ctx = context_from(d, grn)
    h = propagate_equalities(h, ctx.levels, grn)
    result.inventory |= symbols(h)
    return Property(d, h)


__all__ = [
    "StateIndexContext", "WPResult", "WPStep", "WPError", "sub_phi", "sub_wall", "sub_first",
    "sub_assert", "sub_junction", "external_wall", "internal_wall", "shifted_resources",
    "wp_atom", "wp_path", "close_cycle", "shift_discrete",
]

"""Hybrid gene regulatory networks: variables, multiplexes and celerities."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .logic import (
    TOP, And, Bot, Cel, Cond, Implies, Not, Or, Thr, Top, conj, thr_to_atom, walk,
)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    bound: int


@dataclass(frozen=True)
class Multiplex:
    name: str
    target: str
    formula: Cond


@dataclass(frozen=True, eq=False)
class GRN:
    """A network ``(V, M, E, C)``; edges are the multiplex targets.

    ``celerities`` maps every :class:`Cel` key to a number, or to ``None``
    when the celerity is left symbolic.  Missing keys are symbolic.
    """

    name: str
    variables: tuple
    multiplexes: tuple
    celerities: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "multiplexes", tuple(self.multiplexes))
        object.__setattr__(self, "celerities", dict(self.celerities))

    @property
    def var_names(self) -> list:
        return [v.name for v in self.variables]

    def var(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise ModelError(f"unknown variable {name!r}")

    def bound(self, name: str) -> int:
        return self.var(name).bound

    def multiplex(self, name: str) -> Multiplex:
        for m in self.multiplexes:
            if m.name == name:
                return m
        raise ModelError(f"unknown multiplex {name!r}")

    def pred(self, v: str) -> tuple:
        self.var(v)
        return tuple(sorted(m.name for m in self.multiplexes if m.target == v))

    def omegas(self, v: str) -> list:
        """All subsets of pred(v), as sorted tuples."""
        p = self.pred(v)
        return [tuple(c) for r in range(len(p) + 1) for c in itertools.combinations(p, r)]

    def celerity_keys(self, v: str | None = None) -> list:
        names = [v] if v is not None else self.var_names
        return [Cel(u, w, n) for u in names for w in self.omegas(u) for n in range(self.bound(u) + 1)]

    def celerity(self, key: Cel):
        """Concrete value of a celerity, or None when symbolic."""
        return self.celerities.get(key)

    def is_concrete(self) -> bool:
        return all(self.celerities.get(k) is not None for k in self.celerity_keys())

    def with_celerities(self, values: Mapping) -> "GRN":
        table = dict(self.celerities)
        for k, x in values.items():
            if isinstance(k, Cel):
                table[k] = x
        return GRN(self.name, self.variables, self.multiplexes, table)

    def discrete_states(self) -> Iterable[dict]:
        names = self.var_names
        for levels in itertools.product(*(range(self.bound(v) + 1) for v in names)):
            yield dict(zip(names, levels))


def holds(formula: Cond, eta: Mapping) -> bool:
    """Satisfaction of a multiplex formula by a discrete state."""
    if isinstance(formula, Thr):
        return eta[formula.var] >= formula.level
    if isinstance(formula, Top):
        return True
    if isinstance(formula, Bot):
        return False
    if isinstance(formula, Not):
        return not holds(formula.arg, eta)
    if isinstance(formula, And):
        return all(holds(a, eta) for a in formula.args)
    if isinstance(formula, Or):
        return any(holds(a, eta) for a in formula.args)
    if isinstance(formula, Implies):
        return not holds(formula.lhs, eta) or holds(formula.rhs, eta)
    raise ModelError(f"unexpected node in multiplex formula: {formula!r}")


def resources(grn: GRN, eta: Mapping, v: str) -> tuple:
    """Multiplexes targeting ``v`` whose formula holds in ``eta`` (sorted)."""
    for u in grn.var_names:
        if u not in eta:
            raise ModelError(f"no level given for {u!r}")
        if not 0 <= eta[u] <= grn.bound(u):
            raise ModelError(f"level {eta[u]} of {u!r} outside [0, {grn.bound(u)}]")
    return tuple(m for m in grn.pred(v) if holds(grn.multiplex(m).formula, eta))


def resource_formula(grn: GRN, v: str, omega: Iterable[str]) -> Cond:
    """Discrete condition stating that the resources of ``v`` are exactly ``omega``."""
    omega = set(omega)
    pred = grn.pred(v)
    if not omega <= set(pred):
        raise ModelError(f"{sorted(omega - set(pred))} are not predecessors of {v!r}")
    parts = []
    for m in pred:
        phi = thr_to_atom(grn.multiplex(m).formula)
        parts.append(phi if m in omega else Not(phi))
    return conj(*parts) if parts else TOP


def active_celerity(grn: GRN, eta: Mapping, v: str) -> Cel:
    return Cel(v, resources(grn, eta, v), eta[v])


# --------------------------------------------------------------------------
# Sign profiles

SIGN_OF_REL = {">0": 1, "<0": -1, "=0": 0}


def admissible_profiles(bound: int) -> list:
    """Sign vectors over levels 0..bound allowed for one (v, omega) group.

    Either all levels share one nonzero sign, or the signs are + below some
    level n0, 0 at n0 and - above it.
    """
    profiles = [(1,) * (bound + 1), (-1,) * (bound + 1)]
    for n0 in range(bound + 1):
        profiles.append((1,) * n0 + (0,) + (-1,) * (bound - n0))
    return profiles


def sign_profile_satisfiable(grn: GRN, v: str, omega, literals) -> bool:
    """Is some admissible profile consistent with all ``(level, rel)`` literals?

    ``rel`` is one of ``">0"``, ``"<0"``, ``"=0"``.
    """
    return literals_satisfiable(grn.bound(v), literals)


def literals_satisfiable(bound: int, literals) -> bool:
    wanted = [(n, SIGN_OF_REL[rel]) for n, rel in literals]
    for n, _ in wanted:
        if not 0 <= n <= bound:
            raise ModelError(f"level {n} outside [0, {bound}]")
    return any(all(p[n] == s for n, s in wanted) for p in admissible_profiles(bound))


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def validate(grn: GRN) -> list:
    """Return one diagnostic string per violated network invariant."""
    out = []
    names = [v.name for v in grn.variables]
    for n in sorted({n for n in names if names.count(n) > 1}):
        out.append(f"duplicate variable {n!r}")
    mnames = [m.name for m in grn.multiplexes]
    for n in sorted({n for n in mnames if mnames.count(n) > 1}):
        out.append(f"duplicate multiplex {n!r}")
    for v in grn.variables:
        if v.bound < 1:
            out.append(f"variable {v.name!r}: boundary {v.bound} must be >= 1")
    bounds = {v.name: v.bound for v in grn.variables}
    for m in grn.multiplexes:
        if m.target not in bounds:
            out.append(f"multiplex {m.name!r}: unknown target {m.target!r}")
        for node in walk(m.formula):
            if isinstance(node, Thr):
                if node.var not in bounds:
                    out.append(f"multiplex {m.name!r}: unknown variable {node.var!r}")
                elif not 1 <= node.level <= bounds[node.var]:
                    out.append(
                        f"multiplex {m.name!r}: level-out-of-range {node.var} >= {node.level}"
                        f" (boundary {bounds[node.var]})"
                    )
            elif not isinstance(node, (Not, And, Or, Implies, Top, Bot)):
                out.append(f"multiplex {m.name!r}: unexpected node {type(node).__name__}")
    if out:
        return out
    for key, val in grn.celerities.items():
        if key.var not in bounds:
            out.append(f"celerity {key}: unknown variable")
            continue
        pred = set(grn.pred(key.var))
        if not set(key.omega) <= pred:
            out.append(f"celerity for {key.var}: unknown multiplex in {list(key.omega)}")
        if not 0 <= key.level <= bounds[key.var]:
            out.append(f"celerity for {key.var}: level {key.level} out of range")
    if out:
        return out
    for v in grn.var_names:
        for w in grn.omegas(v):
            lits = []
            for n in range(grn.bound(v) + 1):
                x = grn.celerity(Cel(v, w, n))
                if x is not None:
                    lits.append((n, {1: ">0", -1: "<0", 0: "=0"}[_sign(x)]))
            if lits and not literals_satisfiable(grn.bound(v), lits):
                out.append(f"sign-profile violation for C[{v},{{{','.join(w)}}},*]")
    return out


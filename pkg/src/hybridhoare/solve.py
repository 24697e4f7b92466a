"""Concrete valuations for generated constraints.

Two routes: an SMT-LIB 2 script handed to an external solver process, and
built-in seeded sampling.  The sampler treats top-level equalities as
assignments (each one is solved for a single symbol) and draws everything
else, so constraints such as ``pi'[A,1] = 1 - C * T1`` hold exactly instead
of being hit by chance.
"""
from __future__ import annotations

import logging
import math
import os
import random
import re
import shlex
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .logic import (
    BOT, And, Atom, Bin, Bot, Cel, Cond, Const, Dur, Eta, EvalError, Implies, Neg, Not, Or, Pi,
    Top, eval_cond, symbols,
)
from .model import GRN, admissible_profiles
from .poly import eval_poly, poly_symbols, solve_linear, sym_key, to_poly

log = logging.getLogger(__name__)

SOLVER_ENV = "HHL_SOLVER"

# proposal ranges for symbols whose domain is unbounded on that side
CEL_RANGE = Fraction(2)
DUR_RANGE = Fraction(4)
GRID_BITS = 20
GRID = 1 << GRID_BITS


@dataclass(frozen=True)
class SymbolDomain:
    """Admissible values of one symbol; ``None`` bounds are open-ended."""

    symbol: object
    lo: Fraction | None = None
    hi: Fraction | None = None
    lo_strict: bool = False
    hi_strict: bool = False
    sign: int = 0
    integer: bool = False

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError(f"empty domain for {self.symbol}")

    def contains(self, x) -> bool:
        if self.lo is not None and (x < self.lo or (self.lo_strict and x == self.lo)):
            return False
        if self.hi is not None and (x > self.hi or (self.hi_strict and x == self.hi)):
            return False
        if self.sign and (x > 0) - (x < 0) != self.sign:
            return False
        return not self.integer or x == int(x)

    def with_sign(self, sign: int) -> "SymbolDomain":
        return SymbolDomain(self.symbol, self.lo, self.hi, self.lo_strict, self.hi_strict, sign, self.integer)


def default_domain(sym, grn: GRN | None = None) -> SymbolDomain:
    if isinstance(sym, Pi):
        return SymbolDomain(sym, Fraction(0), Fraction(1))
    if isinstance(sym, Cel):
        return SymbolDomain(sym)
    if isinstance(sym, Dur):
        return SymbolDomain(sym, Fraction(0), None, lo_strict=True)
    if isinstance(sym, Eta):
        hi = grn.bound(sym.var) if grn is not None and sym.var in grn.var_names else 3
        return SymbolDomain(sym, Fraction(0), Fraction(hi), integer=True)
    raise TypeError(f"not a symbol: {sym!r}")


def sign_literal(c):
    """``(cel, rel)`` for atoms ``C op 0`` or ``0 op C`` with op in {<, >, =}."""
    if not isinstance(c, Atom):
        return None
    lhs, rhs, op = c.lhs, c.rhs, c.op
    if isinstance(rhs, Cel) and isinstance(lhs, Const):
        lhs, rhs = rhs, lhs
        op = {"<": ">", ">": "<"}.get(op, op)
    if isinstance(lhs, Cel) and isinstance(rhs, Const) and rhs.value == 0 and op in ("<", ">", "="):
        return lhs, op + "0"
    return None


def conjuncts(f: Cond) -> list:
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(conjuncts(a))
        return out
    return [f]


def top_level_signs(f: Cond) -> dict:
    """Celerity signs fixed by top-level conjuncts ``C > 0`` / ``C < 0``."""
    out = {}
    for c in conjuncts(f):
        s = sign_literal(c)
        if s and s[1] in (">0", "<0"):
            out[s[0]] = 1 if s[1] == ">0" else -1
    return out


def default_domains(f: Cond, grn: GRN | None = None, domains: Mapping | None = None) -> dict:
    """Domains for every symbol of ``f``; explicit entries win over defaults."""
    out = {}
    signs = top_level_signs(f)
    for s in sorted(symbols(f), key=sym_key):
        d = (domains or {}).get(s) or default_domain(s, grn)
        if s in signs and not d.sign:
            d = d.with_sign(signs[s])
        out[s] = d
    return out


def sampler(dom: SymbolDomain):
    """Function ``rng -> Fraction`` drawing grid points of ``dom``.

    Open-ended sides are capped by the proposal ranges.
    """
    if dom.integer:
        lo_i, hi_i = int(dom.lo), int(dom.hi)
        return lambda rng: Fraction(rng.randint(lo_i, hi_i))
    span = DUR_RANGE if isinstance(dom.symbol, Dur) else CEL_RANGE
    lo = dom.lo if dom.lo is not None else -span
    hi = dom.hi if dom.hi is not None else (lo + span if lo >= 0 else span)
    if dom.sign > 0:
        lo = max(lo, Fraction(0))
    elif dom.sign < 0:
        hi = min(hi, Fraction(0))
    lo, width = Fraction(lo), Fraction(hi) - Fraction(lo)
    den = math.lcm(lo.denominator, width.denominator)
    base, step, scale = int(lo * den) * GRID, int(width * den), GRID * den
    is_cel = isinstance(dom.symbol, Cel)

    def one(rng):
        for _ in range(1000):
            k = rng.getrandbits(GRID_BITS)
            x = Fraction(base + step * k, scale)
            # interior points lie inside the domain; only the ends and 0 need a check
            if k and x:
                return x
            if dom.contains(x) and not (x == 0 and is_cel):
                return x
        raise ValueError(f"cannot draw from domain of {dom.symbol}")

    return one


def draw(rng: random.Random, dom: SymbolDomain) -> Fraction:
    return sampler(dom)(rng)


# --------------------------------------------------------------------------
# sampling


@dataclass
class SampleReport:
    requested: int
    accepted: int = 0
    proposals: int = 0
    exhausted: bool = False

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def _preference(sym) -> tuple:
    # fractional parts first, then durations, celerities last
    rank = {Pi: 0, Dur: 1, Cel: 2, Eta: 3}[type(sym)]
    return (rank, sym_key(sym))


@dataclass
class _Definition:
    target: object
    num: dict
    den: dict
    deps: set = field(default_factory=set)


def solved_form(f: Cond) -> tuple:
    """Split the top-level equalities of ``f`` into acyclic definitions.

    Returns ``(definitions in evaluation order, free symbols)``.
    """
    defs = []
    targets = set()
    for c in conjuncts(f):
        if not (isinstance(c, Atom) and c.op == "="):
            continue
        p = to_poly(Bin("-", c.lhs, c.rhs))
        if p is None:
            continue
        for x in sorted(poly_symbols(p), key=_preference):
            if x in targets or isinstance(x, Eta):
                continue
            sol = solve_linear(p, x)
            if sol is None:
                continue
            num, den = sol
            deps = poly_symbols(num) | poly_symbols(den)
            defs.append(_Definition(x, num, den, deps))
            targets.add(x)
            break
    # order definitions so each only reads free or earlier symbols
    ordered, done = [], set()
    pending = list(defs)
    while pending:
        ready = [d for d in pending if not (d.deps & targets) - done]
        if not ready:
            # cycle: release the last pending target back to the free symbols
            dropped = pending.pop()
            targets.discard(dropped.target)
            continue
        for d in ready:
            ordered.append(d)
            done.add(d.target)
            pending.remove(d)
    free = sorted(symbols(f) - targets, key=sym_key)
    return ordered, free


def sample_models(f: Cond, domains: Mapping | None = None, n: int = 100, seed: int = 0,
                  max_proposals: int = 1_000_000, grn: GRN | None = None) -> tuple:
    """Up to ``n`` valuations satisfying ``f``, plus a :class:`SampleReport`.

    Every returned valuation has been checked with :func:`eval_cond`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    report = SampleReport(n)
    if f == BOT:
        report.exhausted = True
        return [], report
    doms = default_domains(f, grn, domains)
    defs, free = solved_form(f)
    draws = [(s, sampler(doms[s])) for s in free]
    rng = random.Random(seed)
    models = []
    while len(models) < n:
        if report.proposals >= max_proposals:
            report.exhausted = True
            log.info("sampling budget exhausted after %d proposals", report.proposals)
            break
        report.proposals += 1
        env = {s: one(rng) for s, one in draws}
        ok = True
        for d in defs:
            den = eval_poly(d.den, env)
            if den == 0:
                ok = False
                break
            x = eval_poly(d.num, env) / den
            if not doms[d.target].contains(x):
                ok = False
                break
            env[d.target] = x
        if not ok:
            continue
        try:
            if not eval_cond(f, env):
                continue
        except EvalError:
            continue
        models.append(env)
        report.accepted += 1
    return models, report


def complete_celerities(grn: GRN, valuation: Mapping, rng: random.Random) -> dict | None:
    """Extend ``valuation`` with a value for every celerity of ``grn``.

    For each ``(v, omega)`` group an admissible sign profile consistent
    with the values already present is chosen at random, and missing
    levels get a random magnitude with that sign.  Concrete values stored
    in the network count as present.  Returns None when a group already
    violates every profile.
    """
    out = dict(valuation)
    for v in grn.var_names:
        b = grn.bound(v)
        for omega in grn.omegas(v):
            keys = [Cel(v, omega, k) for k in range(b + 1)]
            known = {}
            for k, key in enumerate(keys):
                x = out.get(key, grn.celerity(key))
                if x is not None:
                    known[k] = Fraction(x)
            profiles = [p for p in admissible_profiles(b)
                        if all(p[k] == (x > 0) - (x < 0) for k, x in known.items())]
            if not profiles:
                return None
            prof = rng.choice(profiles)
            for k, key in enumerate(keys):
                if k in known:
                    out[key] = known[k]
                elif prof[k] == 0:
                    out[key] = Fraction(0)
                else:
                    mag = CEL_RANGE * Fraction(rng.randint(1, GRID), GRID)
                    out[key] = mag * prof[k]
    return out


# --------------------------------------------------------------------------
# SMT-LIB export


def smt_name(sym) -> str:
    if isinstance(sym, Pi):
        return f"{'pip' if sym.entering else 'pi'}_{sym.var}_{sym.index}"
    if isinstance(sym, Cel):
        omega = "_".join(sym.omega) if sym.omega else "empty"
        return f"C_{sym.var}_{omega}_{sym.level}"
    if isinstance(sym, Dur):
        return sym.name
    if isinstance(sym, Eta):
        return f"eta_{sym.var}"
    raise TypeError(sym)


def _smt_number(x: Fraction) -> str:
    x = Fraction(x)
    mag = abs(x)
    body = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {body})" if x < 0 else body


def _smt_term(t) -> str:
    if isinstance(t, Const):
        return _smt_number(t.value)
    if isinstance(t, (Pi, Cel, Dur, Eta)):
        return smt_name(t)
    if isinstance(t, Neg):
        return f"(- {_smt_term(t.arg)})"
    if isinstance(t, Bin):
        return f"({t.op} {_smt_term(t.lhs)} {_smt_term(t.rhs)})"
    raise TypeError(t)


def smt_formula(c: Cond) -> str:
    if isinstance(c, Top):
        return "true"
    if isinstance(c, Bot):
        return "false"
    if isinstance(c, Atom):
        if c.op == "!=":
            return f"(distinct {_smt_term(c.lhs)} {_smt_term(c.rhs)})"
        op = "=" if c.op == "=" else c.op
        return f"({op} {_smt_term(c.lhs)} {_smt_term(c.rhs)})"
    if isinstance(c, Not):
        return f"(not {smt_formula(c.arg)})"
    if isinstance(c, And):
        return "(and " + " ".join(smt_formula(a) for a in c.args) + ")"
    if isinstance(c, Or):
        return "(or " + " ".join(smt_formula(a) for a in c.args) + ")"
    if isinstance(c, Implies):
        return f"(=> {smt_formula(c.lhs)} {smt_formula(c.rhs)})"
    raise TypeError(f"cannot export {type(c).__name__}")


def _domain_assertion(name: str, d: SymbolDomain) -> list:
    parts = []
    if d.lo is not None:
        parts.append(f"({'<' if d.lo_strict else '<='} {_smt_number(d.lo)} {name})")
    if d.hi is not None:
        parts.append(f"({'<' if d.hi_strict else '<='} {name} {_smt_number(d.hi)})")
    if d.sign:
        parts.append(f"({'>' if d.sign > 0 else '<'} {name} 0)")
    return parts


def export_smt(f: Cond, domains: Mapping | None = None, grn: GRN | None = None) -> str:
    """SMT-LIB 2 script (QF_NRA) asserting ``f`` and the symbol domains.

    Only explicitly given domains carry sign restrictions; the default
    domains bound fractional parts to [0, 1] and durations to T > 0.
    """
    syms = sorted(symbols(f), key=sym_key)
    lines = ["(set-logic QF_NRA)"]
    for s in syms:
        lines.append(f"(declare-const {smt_name(s)} Real)")
    for s in syms:
        d = (domains or {}).get(s) or default_domain(s, grn)
        if d.integer:
            log.warning("level %s exported as a real constant", s)
        for a in _domain_assertion(smt_name(s), d):
            lines.append(f"(assert {a})")
    lines.append(f"(assert {smt_formula(f)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# external solver


class SolverError(RuntimeError):
    pass


@dataclass
class SolverResult:
    status: str  # sat | unsat | unknown
    model: dict = field(default_factory=dict)
    raw: str = ""


def solver_command(explicit: str | None = None) -> str | None:
    return explicit or os.environ.get(SOLVER_ENV) or None


def _sexprs(text: str):
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) < 2:
                raise SolverError("unbalanced solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced solver output")
    return stack[0]


def _value(e) -> Fraction:
    if isinstance(e, str):
        return Fraction(e)
    op, *args = e
    vals = [_value(a) for a in args]
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:])
    if op == "+":
        return sum(vals, Fraction(0))
    if op == "*":
        out = Fraction(1)
        for v in vals:
            out *= v
        return out
    if op == "/":
        return vals[0] / vals[1]
    raise SolverError(f"cannot read model value {e!r} (irrational values are not supported)")


def parse_model(text: str, syms) -> dict:
    """Map ``define-fun`` entries of a model back to symbols."""
    by_name = {smt_name(s): s for s in syms}
    out = {}
    for e in _sexprs(text):
        if not isinstance(e, list) or not e:
            continue
        if e[0] == "model":
            items = e[1:]
        elif e[0] == "define-fun":
            items = [e]
        else:  # bare list of definitions
            items = e
        for item in items:
            if isinstance(item, list) and len(item) == 5 and item[0] == "define-fun":
                name = item[1]
                if name in by_name:
                    out[by_name[name]] = _value(item[4])
    return out


def run_solver(script: str, cmd: str, timeout: float = 30.0, syms=()) -> SolverResult:
    """Feed ``script`` to ``cmd`` on stdin and read sat/unsat and the model."""
    try:
        proc = subprocess.run(shlex.split(cmd), input=script, capture_output=True, text=True,
                              timeout=timeout)
    except FileNotFoundError as e:
        raise SolverError(f"solver not found: {cmd}") from e
    except subprocess.TimeoutExpired:
        return SolverResult("unknown", {}, "timeout")
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    status = first.strip()
    if status not in ("sat", "unsat", "unknown"):
        raise SolverError(f"unexpected solver output: {out[:200]!r} {proc.stderr[:200]!r}")
    model = parse_model(rest, syms) if status == "sat" else {}
    return SolverResult(status, model, out)


def solve_smt(f: Cond, cmd: str, timeout: float = 30.0, domains=None, grn: GRN | None = None) -> SolverResult:
    return run_solver(export_smt(f, domains, grn), cmd, timeout, symbols(f))


__all__ = [
    "SymbolDomain", "SampleReport", "SolverResult", "SolverError", "default_domain", "default_domains",
    "draw", "sampler", "sample_models", "solved_form", "complete_celerities", "export_smt", "smt_name",
    "smt_formula", "run_solver", "solve_smt", "parse_model", "solver_command", "top_level_signs",
    "sign_literal", "conjuncts", "SOLVER_ENV",
]

"""Executable hybrid semantics on concrete networks.

A hybrid state pairs discrete levels with fractional parts in [0, 1].
Inside a discrete state every variable moves at its active celerity; the
continuous transition stops at the first moment some non-sliding variable
reaches its border, and a discrete transition then moves that variable one
level up or down, reflecting its fractional part (1 becomes 0 or 0 becomes 1).

Arithmetic is exact when the celerities and fractional parts are Fractions.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .logic import (
    And, CelBound, Cond, Const, Dur, HoareTriple, Implies, Not, Or, Pi, Property, Slide, Top,
    Bot, Eta, EvalError, compare, eval_cond, eval_property, substitute,
)
from .model import GRN, ModelError, active_celerity

log = logging.getLogger(__name__)

INF = math.inf
DEFAULT_TOL = 1e-9


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class HybridState:
    """Levels and fractional parts, stored as name-sorted tuples so states hash."""

    eta: tuple
    pi: tuple

    def __post_init__(self):
        for name in ("eta", "pi"):
            val = getattr(self, name)
            if isinstance(val, Mapping):
                val = val.items()
            object.__setattr__(self, name, tuple(sorted(val)))

    @property
    def levels(self) -> dict:
        return dict(self.eta)

    @property
    def fracs(self) -> dict:
        return dict(self.pi)

    def level(self, v: str) -> int:
        return self.levels[v]

    def frac(self, v: str):
        return self.fracs[v]

    def replace(self, eta: Mapping | None = None, pi: Mapping | None = None) -> "HybridState":
        e, p = self.levels, self.fracs
        e.update(eta or {})
        p.update(pi or {})
        return HybridState(e, p)

    def __str__(self):
        levels = ",".join(str(n) for _, n in self.eta)
        fracs = ",".join(_num(x) for _, x in self.pi)
        return f"({levels}) [{fracs}]"


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(x)


@dataclass(frozen=True)
class Transition:
    kind: str  # continuous | discrete
    source: HybridState
    target: HybridState
    duration: object = 0
    fired: str | None = None
    sign: int = 0


@dataclass
class Trace:
    initial: HybridState
    transitions: list = field(default_factory=list)
    steady: bool = False
    cycle: tuple | None = None  # (index of first repeated entry, period)

    @property
    def elapsed(self):
        return sum((t.duration for t in self.transitions), Fraction(0))

    def entries(self) -> list:
        """Entry points of the visited discrete states, starting with the initial one."""
        return [self.initial] + [t.target for t in self.transitions if t.kind == "discrete"]

    def discrete_path(self) -> list:
        return [(t.fired, t.sign) for t in self.transitions if t.kind == "discrete"]


@dataclass(frozen=True)
class WallStatus:
    external: bool
    internal: bool

    @property
    def sliding(self) -> bool:
        return self.external or self.internal


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def _close(a, b, tol: float) -> bool:
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return a == b
    if a == b:
        return True
    return abs(a - b) <= tol


def check_state(grn: GRN, h: HybridState) -> None:
    levels, fracs = h.levels, h.fracs
    if set(levels) != set(grn.var_names) or set(fracs) != set(grn.var_names):
        raise DynamicsError("state must give a level and a fractional part for every variable")
    for v in grn.var_names:
        if not 0 <= levels[v] <= grn.bound(v):
            raise DynamicsError(f"level {levels[v]} of {v} outside [0, {grn.bound(v)}]")
        if not 0 <= fracs[v] <= 1:
            raise DynamicsError(f"fractional part {fracs[v]} of {v} outside [0, 1]")


def celerity_at(grn: GRN, levels: Mapping, v: str):
    try:
        key = active_celerity(grn, levels, v)
    except ModelError as e:
        raise DynamicsError(str(e)) from e
    c = grn.celerity(key)
    if c is None:
        raise DynamicsError(f"symbolic celerity {key.var},{{{','.join(key.omega)}}},{key.level} in simulation")
    return c


def celerity(grn: GRN, h: HybridState, v: str):
    """Active celerity of ``v`` in ``h``."""
    return celerity_at(grn, h.levels, v)


def touch_delay(grn: GRN, h: HybridState, v: str):
    """Time for ``v`` to reach the border it moves towards (``inf`` when still)."""
    c = celerity(grn, h, v)
    if c == 0:
        return INF
    x = h.frac(v)
    return (1 - x) / c if c > 0 else -x / c


def wall_status(grn: GRN, h: HybridState, v: str) -> WallStatus:
    c = celerity(grn, h, v)
    s = _sgn(c)
    n = h.level(v)
    external = (s < 0 and n == 0) or (s > 0 and n == grn.bound(v))
    internal = False
    if s and not external:
        nxt = h.levels
        nxt[v] = n + s
        internal = s * _sgn(celerity_at(grn, nxt, v)) == -1
    return WallStatus(external, internal)


def sliding_variables(grn: GRN, h: HybridState) -> frozenset:
    return frozenset(v for v in grn.var_names if wall_status(grn, h, v).sliding)


def knocking(grn: GRN, h: HybridState) -> tuple:
    """``(first(h), delta_first)``; ``(frozenset(), inf)`` in a steady state."""
    sv = sliding_variables(grn, h)
    delays = {v: touch_delay(grn, h, v) for v in grn.var_names if v not in sv}
    finite = [d for d in delays.values() if d != INF]
    if not finite:
        return frozenset(), INF
    best = min(finite)
    return frozenset(v for v, d in delays.items() if d == best), best


def _border(c):
    return Fraction(1 + _sgn(c), 2)


def _clamp(x):
    if x < 0:
        return type(x)(0)
    if x > 1:
        return type(x)(1)
    return x


def continuous_successor(grn: GRN, h: HybridState):
    """``(exit state, duration)`` of the continuous transition from ``h``, or None when steady.

    Knocking variables land on their border.  Other variables advance by
    ``duration * C``; a sliding variable that reaches its wall stays there.
    """
    first, delta = knocking(grn, h)
    if not first:
        return None
    fracs = h.fracs
    new = {}
    for u in grn.var_names:
        c = celerity(grn, h, u)
        if u in first:
            new[u] = _border(c)
        else:
            # for non-sliding variables the clamp only absorbs float rounding
            new[u] = _clamp(fracs[u] + delta * c)
    return HybridState(h.levels, new), delta


def discrete_successors(grn: GRN, h: HybridState) -> list:
    """``[(v, sign, state)]`` for every knocking variable already on its border."""
    first, _ = knocking(grn, h)
    out = []
    for v in sorted(first):
        if touch_delay(grn, h, v) != 0:
            continue
        s = _sgn(celerity(grn, h, v))
        out.append((v, s, h.replace({v: h.level(v) + s}, {v: Fraction(1 - s, 2)})))
    return out


POLICIES = ("lexicographic", "enumerate-all", "seeded-random")


def _find_repeat(entries: list, h: HybridState, tol: float):
    for k, e in enumerate(entries):
        if e.eta == h.eta and all(_close(a, b, tol) for (_, a), (_, b) in zip(e.pi, h.pi)):
            return k
    return None


def simulate(grn: GRN, h0: HybridState, max_steps: int = 100, policy: str = "lexicographic",
             seed: int | None = None, tol: float = DEFAULT_TOL, max_traces: int = 1000):
    """Alternate continuous and discrete transitions from ``h0``.

    ``max_steps`` bounds the number of discrete transitions.  The run stops
    early at a steady state or when an entry point repeats (a cycle).  With
    ``enumerate-all`` a list of traces is returned, one per branch.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    check_state(grn, h0)
    rng = random.Random(seed)

    def advance(trace, entries, exit_state, move) -> bool:
        v, s, nxt = move
        trace.transitions.append(Transition("discrete", exit_state, nxt, 0, v, s))
        k = _find_repeat(entries, nxt, tol)
        if k is not None:
            trace.cycle = (k, trace.elapsed - _entry_time(trace, k))
            return True
        entries.append(nxt)
        return False

    out = []
    pending = [(Trace(h0), [h0], max_steps)]
    while pending:
        trace, entries, budget = pending.pop()
        while True:
            r = continuous_successor(grn, entries[-1])
            if r is None:
                trace.steady = True
                break
            if budget == 0:
                break
            exit_state, dt = r
            trace.transitions.append(Transition("continuous", entries[-1], exit_state, dt))
            succ = discrete_successors(grn, exit_state)
            if not succ:
                trace.steady = True
                break
            move = rng.choice(succ) if policy == "seeded-random" else succ[0]
            if policy == "enumerate-all":
                for other in succ[1:]:
                    if len(out) + len(pending) + 1 >= max_traces:
                        break
                    fork, fork_entries = Trace(trace.initial, list(trace.transitions)), list(entries)
                    if advance(fork, fork_entries, exit_state, other):
                        out.append(fork)
                    else:
                        pending.append((fork, fork_entries, budget - 1))
            budget -= 1
            if advance(trace, entries, exit_state, move):
                break
        out.append(trace)
    if policy == "enumerate-all":
        return out
    return out[0]


def _entry_time(trace: Trace, k: int):
    """Elapsed time when the k-th entry point was reached."""
    if k == 0:
        return Fraction(0)
    seen, total = 0, Fraction(0)
    for t in trace.transitions:
        total += t.duration
        if t.kind == "discrete":
            seen += 1
            if seen == k:
                return total
    return total


# --------------------------------------------------------------------------
# trace output


def trace_text(trace: Trace) -> str:
    lines = [f"STATE {trace.initial}"]
    for t in trace.transitions:
        if t.kind == "continuous":
            lines.append(f"CONT {_num(t.duration)}")
        else:
            lines.append(f"DISC {t.fired}{'+' if t.sign > 0 else '-'}")
            lines.append(f"STATE {t.target}")
    if trace.cycle:
        lines.append(f"CYCLE detected from entry {trace.cycle[0]}, period {_num(trace.cycle[1])}")
    elif trace.steady:
        lines.append("STEADY")
    return "\n".join(lines) + "\n"


def _state_json(h: HybridState) -> dict:
    return {"eta": dict(h.eta), "pi": {v: _json_num(x) for v, x in h.pi}}


def _json_num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    return x


def trace_json(trace: Trace) -> dict:
    steps = []
    for t in trace.transitions:
        if t.kind == "continuous":
            steps.append({"kind": "continuous", "duration": _json_num(t.duration), "state": _state_json(t.target)})
        else:
            steps.append({"kind": "discrete", "fired": t.fired, "sign": "+" if t.sign > 0 else "-",
                          "state": _state_json(t.target)})
    out = {"initial": _state_json(trace.initial), "steps": steps, "elapsed": _json_num(trace.elapsed),
           "steady": trace.steady, "cycle": None}
    if trace.cycle:
        out["cycle"] = {"entry": trace.cycle[0], "period": _json_num(trace.cycle[1])}
    return out


# --------------------------------------------------------------------------
# semantic checks


def check_assertion(grn: GRN, h_entry: HybridState, h_exit: HybridState, dt, a: Cond,
                    tol: float = DEFAULT_TOL) -> bool:
    """Does the continuous transition from ``h_entry`` satisfy ``(dt, a)``?

    Every leaf requires the time spent in the state to equal ``dt``.  A
    slide needs the variable's own touch delay to be strictly shorter; ties
    are reported with a warning.
    """
    if dt < 0:
        raise DynamicsError("negative duration")
    _, delta = knocking(grn, h_entry)
    timed = delta != INF and _close(delta, dt, tol)

    def sat(x) -> bool:
        if isinstance(x, Top):
            return timed
        if isinstance(x, Bot):
            return False
        if isinstance(x, CelBound):
            return timed and compare(x.op, celerity(grn, h_entry, x.var), x.value)
        if isinstance(x, Slide):
            d = touch_delay(grn, h_entry, x.var)
            if d != INF and _close(d, delta, tol):
                log.warning("slide(%s): touch delay equals the time spent in the state", x.var)
            ok = timed and d < delta and not _close(d, delta, tol)
            c = celerity(grn, h_entry, x.var)
            if x.direction == "+":
                ok = ok and c > 0
            elif x.direction == "-":
                ok = ok and c < 0
            return ok
        if isinstance(x, Not):
            return timed and not sat(x.arg)
        if isinstance(x, And):
            return all(sat(y) for y in x.args)
        if isinstance(x, Or):
            return any(sat(y) for y in x.args)
        if isinstance(x, Implies):
            return sat(Or((Not(x.lhs), x.rhs)))
        raise DynamicsError(f"not an assertion: {x!r}")

    return sat(a)


@dataclass
class TripleVerdict:
    status: str  # all-pass | counterexample | unsatisfiable-pre
    checked: int = 0
    rejected: int = 0
    counterexample: dict | None = None
    message: str = ""


def _duration_value(atom, valuation: Mapping, delta):
    if isinstance(atom.duration, Const):
        return atom.duration.value
    if isinstance(atom.duration, Dur) and atom.duration in valuation:
        return valuation[atom.duration]
    # unconstrained duration symbol: any duration is allowed
    return delta


def run_path(grn: GRN, h: HybridState, path, valuation: Mapping | None = None,
             tol: float = DEFAULT_TOL) -> tuple:
    """Execute path atoms from entry point ``h``.

    Returns ``(final entry point, trace, None)`` on success or
    ``(last entry point, trace, reason)`` at the first failing atom.
    """
    valuation = valuation or {}
    trace = Trace(h)
    for k, atom in enumerate(path):
        r = continuous_successor(grn, h)
        tag = f"step {k + 1} ({atom.var}{'+' if atom.sign > 0 else '-'})"
        if r is None:
            return h, trace, f"{tag}: steady state reached"
        exit_state, delta = r
        trace.transitions.append(Transition("continuous", h, exit_state, delta))
        dt = _duration_value(atom, valuation, delta)
        if not check_assertion(grn, h, exit_state, dt, atom.assertion, tol):
            return h, trace, f"{tag}: assertion fails (time in state {_num(delta)}, expected {_num(dt)})"
        moves = [(v, s, nxt) for v, s, nxt in discrete_successors(grn, exit_state)
                 if v == atom.var and s == atom.sign]
        if not moves:
            got = ", ".join(f"{v}{'+' if s > 0 else '-'}" for v, s, _ in discrete_successors(grn, exit_state))
            return h, trace, f"{tag}: transition not available (possible: {got or 'none'})"
        v, s, h = moves[0]
        trace.transitions.append(Transition("discrete", exit_state, h, 0, v, s))
    return h, trace, None


def check_triple_sampled(grn: GRN, triple: HoareTriple, n_samples: int = 100, seed: int = 0,
                         pre: Property | None = None, initial_index: int | None = None,
                         max_proposals: int = 1_000_000, tol: float = DEFAULT_TOL) -> TripleVerdict:
    """Test a triple on states and parameters sampled from its precondition.

    Each sample fixes a discrete state satisfying Pre's D, a valuation of
    Pre's H (celerities, durations, fractional parts), and random values for
    the celerities H leaves open, chosen within admissible sign profiles.
    The path is then executed from the entry point whose fractional parts
    are ``pi'[u, initial_index]`` (default: the path length).  Post is
    checked on the final entry point; for a cycle triple the final entry
    point must also equal the initial one.
    """
    from .simplify import simplify
    from .solve import complete_celerities, sample_models

    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    pre = pre if pre is not None else triple.pre
    if pre is None:
        raise DynamicsError("triple has no precondition")
    if initial_index is None:
        initial_index = 0 if triple.cycle else len(triple.path)
    rng = random.Random(seed)
    states = [eta for eta in grn.discrete_states() if eval_cond(pre.d, {Eta(u): n for u, n in eta.items()})]
    if not states:
        return TripleVerdict("unsatisfiable-pre", message="no discrete state satisfies the precondition")
    verdict = TripleVerdict("all-pass")
    per_state = {}
    for eta in states:
        h = simplify(substitute(pre.h, {Eta(u): Const(n) for u, n in eta.items()}), eta, grn)
        models, _ = sample_models(h, None, n_samples, rng.randrange(1 << 30),
                                  max_proposals=max_proposals, grn=grn)
        per_state[tuple(sorted(eta.items()))] = models
    pool = [(dict(k), m) for k, ms in per_state.items() for m in ms]
    if not pool:
        return TripleVerdict("unsatisfiable-pre", message="sampling budget exhausted without a model of Pre")
    rng.shuffle(pool)
    for eta, model in pool[:n_samples]:
        values = complete_celerities(grn, {k: v for k, v in model.items()}, rng)
        if values is None:
            verdict.rejected += 1
            continue
        concrete = grn.with_celerities(values)
        fracs = {}
        for u in grn.var_names:
            key = Pi(u, initial_index, True)
            fracs[u] = model[key] if key in model else Fraction(rng.randint(0, 1 << 20), 1 << 20)
        h0 = HybridState(eta, fracs)
        verdict.checked += 1
        final, trace, reason = run_path(concrete, h0, triple.path, model, tol)
        if reason is None:
            binding = {k: v for k, v in values.items()}
            try:
                ok = eval_property(triple.post, final.levels, final.fracs, binding, index=0)
            except EvalError as e:
                ok, reason = False, f"postcondition cannot be evaluated: {e}"
            if not ok and reason is None:
                reason = "postcondition fails at the final entry point"
            elif triple.cycle and not (final.eta == h0.eta and all(
                    _close(a, b, tol) for (_, a), (_, b) in zip(final.pi, h0.pi))):
                reason = f"cycle not closed: started at {h0}, ended at {final}"
        if reason is not None:
            verdict.status = "counterexample"
            verdict.counterexample = {"valuation": values, "initial": h0, "reason": reason, "trace": trace}
            verdict.message = reason
            return verdict
    if verdict.checked == 0:
        verdict.status = "unsatisfiable-pre"
        verdict.message = "no sampled valuation extends to an admissible network"
    return verdict

"""Command-line front end: ``hhl wp | simulate | check | export-smt``."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import replace
from fractions import Fraction

from .dynamics import (
    DynamicsError, HybridState, check_triple_sampled, simulate, trace_json, trace_text,
)
from .logic import BOT, Cel, Pi, Property, eval_cond, eval_property, state_env, symbols
from .model import ModelError
from .poly import sym_key
from .simplify import context_from
from .solve import (
    SolverError, complete_celerities, export_smt, run_solver, sample_models, solver_command,
)
from .textio import (
    ParseError, parse_celerities, parse_network, parse_triple, render_atom, render_formula,
    render_number, render_term, to_json,
)
from .wp import WPError, close_cycle, wp_path

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VACUOUS = 2
EXIT_COUNTEREXAMPLE = 3
EXIT_UNSAT_PRE = 4

log = logging.getLogger("hhl")


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from e


def _load(args):
    try:
        grn = parse_network(_read(args.network))
    except ParseError as e:
        raise InputError(f"{args.network}:\n{e}") from e
    triple = None
    if getattr(args, "triple", None):
        try:
            triple = parse_triple(_read(args.triple), grn)
        except ParseError as e:
            raise InputError(f"{args.triple}:\n{e}") from e
    return grn, triple


def _num(x) -> str:
    return render_number(Fraction(x))


def _valuation_json(env) -> dict:
    return {render_term(k): _num(v) for k, v in sorted(env.items(), key=lambda kv: sym_key(kv[0]))}


def _compute(grn, triple, cycle: bool):
    """Run the backward strategy; returns ``(result, final property, vacuous)``."""
    result = wp_path(grn, triple.path, triple.post)
    final = close_cycle(grn, result) if cycle else result.property
    vacuous = not context_from(final.d, grn).satisfiable or final.h == BOT
    return result, final, vacuous


# --------------------------------------------------------------------------
# wp


def cmd_wp(args) -> int:
    grn, triple = _load(args)
    cycle = args.cycle or triple.cycle
    result, final, vacuous = _compute(grn, triple, cycle)
    report = {
        "network": grn.name,
        "triple": triple.name,
        "cycle": cycle,
        "post": {"d": render_formula(triple.post.d), "h": render_formula(triple.post.h)},
        "steps": [
            {"index": s.index, "atom": render_atom(s.atom), "d": render_formula(s.d), "h": render_formula(s.h)}
            for s in result.steps
        ],
        "result": {"d": render_formula(final.d), "h": render_formula(final.h),
                   "ast": to_json(final)},
        "symbols": [render_term(s) for s in sorted(symbols(final.h), key=sym_key)],
        "vacuous": vacuous,
        "warnings": list(result.warnings),
    }
    if args.models:
        models, rep = sample_models(final.h, n=args.models, seed=args.seed, grn=grn,
                                    max_proposals=args.max_proposals)
        report["models"] = [_valuation_json(m) for m in models]
        report["sampling"] = {"proposals": rep.proposals, "accepted": rep.accepted, "exhausted": rep.exhausted}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        style = "unicode" if args.unicode else "ascii"
        print(f"post: {render_formula(triple.post, style)}")
        for s in result.steps:
            print(f"step {s.index}: {render_atom(s.atom, style)}")
            print(f"  D{s.index} = {render_formula(s.d, style)}")
            print(f"  H{s.index} = {render_formula(s.h, style)}")
        label = "cycle closed" if cycle else "precondition"
        print(f"{label}: D = {render_formula(final.d, style)}")
        print(f"{label}: H = {render_formula(final.h, style)}")
        if "models" in report:
            print(f"sampled {len(report['models'])} model(s)")
    if vacuous:
        print("warning: vacuous precondition", file=sys.stderr)
        return EXIT_VACUOUS
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def _assignments(text: str, kind) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise InputError(f"expected NAME=VALUE, got {part!r}")
        name, value = (x.strip() for x in part.split("=", 1))
        try:
            out[name] = kind(value)
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"bad value for {name}: {value!r}") from e
    return out


def cmd_simulate(args) -> int:
    grn, _ = _load(args)
    table = {}
    if args.celerities:
        try:
            table = {k: v for k, v in parse_celerities(_read(args.celerities)).items() if isinstance(k, Cel)}
        except (ParseError, ValueError) as e:
            raise InputError(f"{args.celerities}: {e}") from e
    if args.complete:
        filled = complete_celerities(grn, table, random.Random(args.seed))
        if filled is None:
            raise InputError("celerities violate every admissible sign profile")
        table = filled
    grn = grn.with_celerities(table)
    if not grn.is_concrete():
        missing = [render_term(k) for k in grn.celerity_keys() if grn.celerity(k) is None]
        raise InputError(f"symbolic celerities left: {', '.join(missing)} (give values or use --complete)")
    eta = _assignments(args.eta, int)
    pi = _assignments(args.pi or "", Fraction)
    for v in grn.var_names:
        pi.setdefault(v, Fraction(0))
    try:
        h0 = HybridState(eta, pi)
        traces = simulate(grn, h0, args.max_steps, args.policy, args.seed)
    except DynamicsError as e:
        raise InputError(str(e)) from e
    if not isinstance(traces, list):
        traces = [traces]
    if args.format == "json":
        print(json.dumps([trace_json(t) for t in traces] if len(traces) > 1 else trace_json(traces[0]),
                         indent=2, sort_keys=True))
    else:
        for k, t in enumerate(traces):
            if len(traces) > 1:
                print(f"# branch {k}")
            sys.stdout.write(trace_text(t))
    return EXIT_OK


# --------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    grn, triple = _load(args)
    cycle = args.cycle or triple.cycle
    if args.use_wp:
        _, pre, _ = _compute(grn, triple, cycle)
    elif triple.pre is not None:
        pre = triple.pre
    else:
        raise InputError("triple has no precondition (use --use-wp to take the computed one)")
    triple_run = replace(triple, pre=pre, cycle=cycle)
    verdict = check_triple_sampled(grn, triple_run, args.samples, args.seed, pre,
                                   max_proposals=args.max_proposals)
    report = {"status": verdict.status, "checked": verdict.checked, "rejected": verdict.rejected,
              "message": verdict.message}
    if verdict.counterexample:
        cx = verdict.counterexample
        report["counterexample"] = {
            "reason": cx["reason"],
            "initial": str(cx["initial"]),
            "valuation": _valuation_json(cx["valuation"]),
            "trace": trace_json(cx["trace"]),
        }
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(f"verdict: {verdict.status} ({verdict.checked} sample(s) executed)")
        if verdict.message:
            print(verdict.message)
        if verdict.counterexample:
            cx = verdict.counterexample
            print(f"initial state: {cx['initial']}")
            for k, v in report["counterexample"]["valuation"].items():
                print(f"  {k} = {v}")
            sys.stdout.write(trace_text(cx["trace"]))
    return {"all-pass": EXIT_OK, "counterexample": EXIT_COUNTEREXAMPLE}.get(verdict.status, EXIT_UNSAT_PRE)


# --------------------------------------------------------------------------
# export-smt


def cmd_export_smt(args) -> int:
    grn, triple = _load(args)
    cycle = args.cycle or triple.cycle
    _, final, _ = _compute(grn, triple, cycle)
    script = export_smt(final.h, grn=grn)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(script)
    elif not args.solve:
        sys.stdout.write(script)
    if not args.solve:
        return EXIT_OK
    cmd = solver_command(args.solver_cmd)
    if not cmd:
        raise InputError("--solve needs a solver command (--solver-cmd or $HHL_SOLVER)")
    try:
        res = run_solver(script, cmd, args.timeout, symbols(final.h))
    except SolverError as e:
        raise InputError(str(e)) from e
    print(res.status)
    if res.status == "sat":
        for k, v in _valuation_json(res.model).items():
            print(f"  {k} = {v}")
        binding = dict(res.model)
        eta = next((e for e in grn.discrete_states() if eval_cond(final.d, state_env(e))), None)
        pi = {k.var: v for k, v in binding.items() if isinstance(k, Pi) and k.entering and k.index == 0}
        try:
            ok = eta is not None and eval_property(Property(final.d, final.h), eta, pi, binding)
        except Exception as e:  # model may leave a symbol out
            ok = False
            print(f"model check failed: {e}")
        print(f"model re-validated: {str(ok).lower()}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hhl", description="Weakest preconditions and simulation for hybrid GRNs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, triple=True):
        sp.add_argument("network", help="network file")
        if triple:
            sp.add_argument("triple", help="triple file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--seed", type=int, default=0)

    def positive(text):
        n = int(text)
        if n < 1:
            raise argparse.ArgumentTypeError("must be positive")
        return n

    w = sub.add_parser("wp", help="compute the weakest precondition of a triple")
    common(w)
    w.add_argument("--cycle", action="store_true", help="identify the initial and final states")
    w.add_argument("--out", help="write the JSON report here")
    w.add_argument("--unicode", action="store_true", help="display formulas with mathematical symbols")
    w.add_argument("--models", type=int, default=0, help="also sample this many models of the result")
    w.add_argument("--max-proposals", type=positive, default=1_000_000)
    w.set_defaults(func=cmd_wp)

    s = sub.add_parser("simulate", help="simulate a concrete network")
    common(s, triple=False)
    s.add_argument("celerities", nargs="?", help="celerity file (DSL or JSON map)")
    s.add_argument("--eta", required=True, help="initial levels, e.g. A=2,B=0")
    s.add_argument("--pi", help="initial fractional parts, e.g. A=0,B=1/2 (default 0)")
    s.add_argument("--max-steps", type=int, default=100)
    s.add_argument("--policy", choices=("lexicographic", "enumerate-all", "seeded-random"),
                   default="lexicographic")
    s.add_argument("--complete", action="store_true",
                   help="fill missing celerities with random admissible values (seeded)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="test a triple by sampling and simulation")
    common(c)
    c.add_argument("--samples", type=positive, default=100)
    c.add_argument("--use-wp", action="store_true", help="use the computed precondition as Pre")
    c.add_argument("--cycle", action="store_true")
    c.add_argument("--max-proposals", type=positive, default=1_000_000)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("export-smt", help="write the precondition as an SMT-LIB script")
    common(e)
    e.add_argument("--cycle", action="store_true")
    e.add_argument("-o", "--out", help="output file (default: stdout)")
    e.add_argument("--solve", dest="solve", action="store_true", help="run the solver on the script")
    e.add_argument("--no-solve", dest="solve", action="store_false")
    e.add_argument("--solver-cmd", help="solver command reading SMT-LIB on stdin, e.g. 'z3 -in'")
    e.add_argument("--timeout", type=float, default=30.0)
    e.set_defaults(func=cmd_export_smt, solve=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ModelError, WPError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

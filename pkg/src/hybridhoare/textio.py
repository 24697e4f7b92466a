"""Concrete syntax: the network/triple DSL, formula rendering and JSON mirrors.

ASCII formula syntax::

    eta[A]  pi[A,1]  pi'[A,1]  C[A,{m1,m3},1]  T1      symbols
    + - * /  -(x)  1/3                                 arithmetic
    <  <=  >  >=  =  !=                                comparisons
    top  bot  not  and  or  ->                         connectives
    C[A] > 0.2  slide(B)  slide+(B)  slide-(B)         assertion leaves

``eta_A`` and ``C_A`` are accepted as input aliases.  In a multiplex body an
atom is written ``A >= 1``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction

from .logic import (
    BOT, TOP, And, Atom, Bin, Bot, Cel, CelBound, Cond, Const, Dur, Eta, HoareTriple,
    Implies, Neg, Not, Or, PathAtom, Pi, Property, Slide, Term, Thr, Top, is_discrete, walk,
)
from .model import GRN, Multiplex, Variable, validate


@dataclass(frozen=True)
class SourceSpan:
    begin: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.span.line}:{self.span.column}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# --------------------------------------------------------------------------
# Rendering

_ASCII_OPS = {"<": "<", "<=": "<=", ">": ">", ">=": ">=", "=": "=", "!=": "!="}
_UNI_OPS = {"<": "<", "<=": "≤", ">": ">", ">=": "≥", "=": "=", "!=": "≠"}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def render_number(x: Fraction) -> str:
    """Integers and terminating decimals print as decimals, others as ``p/q``."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d, twos, fives = x.denominator, 0, 0
    while d % 2 == 0:
        d, twos = d // 2, twos + 1
    while d % 5 == 0:
        d, fives = d // 5, fives + 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    scaled = abs(x.numerator) * 10 ** digits // x.denominator
    whole, frac = divmod(scaled, 10 ** digits)
    return f"{'-' if x < 0 else ''}{whole}.{frac:0{digits}d}"


def _term(t: Term, uni: bool) -> str:
    if isinstance(t, Const):
        s = render_number(t.value)
        return s.replace("-", "−") if uni else s
    if isinstance(t, Eta):
        return f"η_{t.var}" if uni else f"eta[{t.var}]"
    if isinstance(t, Pi):
        if uni:
            return f"π{'′' if t.entering else ''}_{{{t.var},{t.index}}}"
        return f"pi{chr(39) if t.entering else ''}[{t.var},{t.index}]"
    if isinstance(t, Cel):
        if uni:
            w = "{" + ",".join(t.omega) + "}" if t.omega else "∅"
            return f"C_{{{t.var},{w},{t.level}}}"
        return f"C[{t.var},{{{','.join(t.omega)}}},{t.level}]"
    if isinstance(t, Dur):
        return t.name
    if isinstance(t, Neg):
        return ("−" if uni else "-") + "(" + _term(t.arg, uni) + ")"
    if isinstance(t, Bin):
        p = _PREC[t.op]
        left = _term(t.lhs, uni)
        if isinstance(t.lhs, Bin) and _PREC[t.lhs.op] < p:
            left = f"({left})"
        right = _term(t.rhs, uni)
        if isinstance(t.rhs, Bin) and _PREC[t.rhs.op] <= p:
            right = f"({right})"
        op = t.op
        if uni:
            op = {"-": "−", "*": "·"}.get(op, op)
            if op == "·":
                return f"{left}·{right}"
        return f"{left} {op} {right}"
    raise TypeError(f"not a term: {t!r}")


def _cond(c: Cond, uni: bool) -> str:
    if isinstance(c, Top):
        return "⊤" if uni else "top"
    if isinstance(c, Bot):
        return "⊥" if uni else "bot"
    if isinstance(c, Atom):
        ops = _UNI_OPS if uni else _ASCII_OPS
        return f"{_term(c.lhs, uni)} {ops[c.op]} {_term(c.rhs, uni)}"
    if isinstance(c, Thr):
        return f"{c.var} {'≥' if uni else '>='} {c.level}"
    if isinstance(c, CelBound):
        ops = _UNI_OPS if uni else _ASCII_OPS
        lhs = f"C_{c.var}" if uni else f"C[{c.var}]"
        return f"{lhs} {ops[c.op]} {render_number(c.value)}"
    if isinstance(c, Slide):
        if uni:
            sup = {"": "", "+": "⁺", "-": "⁻"}[c.direction]
            return f"slide{sup}({c.var})"
        return f"slide{c.direction}({c.var})"
    if isinstance(c, Not):
        inner = _cond(c.arg, uni)
        if not isinstance(c.arg, (Top, Bot, Slide, Not)):
            inner = f"({inner})"
        return ("¬" if uni else "not ") + inner
    if isinstance(c, (And, Or)):
        sep = (" ∧ " if isinstance(c, And) else " ∨ ") if uni else (
            " and " if isinstance(c, And) else " or ")
        parts = []
        for a in c.args:
            s = _cond(a, uni)
            if isinstance(a, (And, Or, Implies)):
                s = f"({s})"
            parts.append(s)
        return sep.join(parts)
    if isinstance(c, Implies):
        left = _cond(c.lhs, uni)
        if isinstance(c.lhs, (And, Or, Implies)):
            left = f"({left})"
        right = _cond(c.rhs, uni)
        if isinstance(c.rhs, (And, Or)):
            right = f"({right})"
        return f"{left} {'⇒' if uni else '->'} {right}"
    raise TypeError(f"not a condition: {c!r}")


def render_term(t: Term, style: str = "ascii") -> str:
    return _term(t, style == "unicode")


def render_formula(f, style: str = "ascii") -> str:
    """Render a condition, a Property, a path atom or a path as text.

    ``style`` is ``ascii`` (parseable), ``unicode`` (display) or ``json``.
    """
    if style == "json":
        return json.dumps(to_json(f), sort_keys=True)
    uni = style == "unicode"
    if isinstance(f, Property):
        return f"({_cond(f.d, uni)} ; {_cond(f.h, uni)})"
    if isinstance(f, PathAtom):
        return render_atom(f, style)
    if isinstance(f, tuple):
        return render_path(f, style)
    if isinstance(f, Term):
        return _term(f, uni)
    return _cond(f, uni)


def render_atom(a: PathAtom, style: str = "ascii") -> str:
    uni = style == "unicode"
    sign = "+" if a.sign > 0 else ("−" if uni else "-")
    return f"({_term(a.duration, uni)}, {_cond(a.assertion, uni)}, {a.var}{sign})"


def render_path(path, style: str = "ascii") -> str:
    if not path:
        return "ε" if style == "unicode" else ";"
    return "; ".join(render_atom(a, style) for a in path) + ";"


def render_triple(t: HoareTriple) -> str:
    lines = [f"triple {t.name} {{"]
    if t.pre is not None:
        lines.append(f"  pre: {render_formula(t.pre)};")
    lines.append(f"  path: {render_path(t.path)}")
    lines.append(f"  post: {render_formula(t.post)};")
    if t.cycle:
        lines.append("  cycle: true;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_network(grn: GRN) -> str:
    lines = [f"network {grn.name} {{"]
    for v in grn.variables:
        lines.append(f"  var {v.name} : 0..{v.bound};")
    for m in grn.multiplexes:
        lines.append(f"  multiplex {m.name} -> {m.target} {{ {_cond(m.formula, False)} }}")
    for k in grn.celerity_keys():
        x = grn.celerity(k)
        if x is not None:
            lines.append(f"  celerity {_term(k, False)} = {render_number(x)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# JSON mirror


def to_json(node):
    if isinstance(node, Const):
        return {"kind": "const", "value": str(node.value)}
    if isinstance(node, Eta):
        return {"kind": "eta", "var": node.var}
    if isinstance(node, Pi):
        return {"kind": "pi", "var": node.var, "index": node.index, "entering": node.entering}
    if isinstance(node, Cel):
        return {"kind": "cel", "var": node.var, "omega": list(node.omega), "level": node.level}
    if isinstance(node, Dur):
        return {"kind": "dur", "name": node.name}
    if isinstance(node, Neg):
        return {"kind": "neg", "arg": to_json(node.arg)}
    if isinstance(node, Bin):
        return {"kind": "bin", "op": node.op, "lhs": to_json(node.lhs), "rhs": to_json(node.rhs)}
    if isinstance(node, Top):
        return {"kind": "top"}
    if isinstance(node, Bot):
        return {"kind": "bot"}
    if isinstance(node, Atom):
        return {"kind": "atom", "op": node.op, "lhs": to_json(node.lhs), "rhs": to_json(node.rhs)}
    if isinstance(node, Thr):
        return {"kind": "thr", "var": node.var, "level": node.level}
    if isinstance(node, CelBound):
        return {"kind": "celbound", "var": node.var, "op": node.op, "value": str(node.value)}
    if isinstance(node, Slide):
        return {"kind": "slide", "var": node.var, "dir": node.direction}
    if isinstance(node, Not):
        return {"kind": "not", "arg": to_json(node.arg)}
    if isinstance(node, And):
        return {"kind": "and", "args": [to_json(a) for a in node.args]}
    if isinstance(node, Or):
        return {"kind": "or", "args": [to_json(a) for a in node.args]}
    if isinstance(node, Implies):
        return {"kind": "implies", "lhs": to_json(node.lhs), "rhs": to_json(node.rhs)}
    if isinstance(node, Property):
        return {"kind": "property", "d": to_json(node.d), "h": to_json(node.h)}
    if isinstance(node, PathAtom):
        return {"kind": "step", "duration": to_json(node.duration),
                "assert": to_json(node.assertion), "var": node.var, "sign": node.sign}
    if isinstance(node, tuple):
        return {"kind": "path", "steps": [to_json(a) for a in node]}
    if isinstance(node, HoareTriple):
        return {"kind": "triple", "name": node.name,
                "pre": None if node.pre is None else to_json(node.pre),
                "path": to_json(node.path), "post": to_json(node.post), "cycle": node.cycle}
    if isinstance(node, GRN):
        return {
            "kind": "network", "name": node.name,
            "variables": [{"name": v.name, "bound": v.bound} for v in node.variables],
            "multiplexes": [{"name": m.name, "target": m.target, "formula": to_json(m.formula)}
                            for m in node.multiplexes],
            "celerities": [{"key": to_json(k), "value": str(node.celerity(k))}
                           for k in node.celerity_keys() if node.celerity(k) is not None],
        }
    raise TypeError(f"cannot serialise {node!r}")


def from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    k = obj["kind"]
    if k == "const":
        return Const(Fraction(obj["value"]))
    if k == "eta":
        return Eta(obj["var"])
    if k == "pi":
        return Pi(obj["var"], int(obj["index"]), bool(obj["entering"]))
    if k == "cel":
        return Cel(obj["var"], tuple(obj["omega"]), int(obj["level"]))
    if k == "dur":
        return Dur(obj["name"])
    if k == "neg":
        return Neg(from_json(obj["arg"]))
    if k == "bin":
        return Bin(obj["op"], from_json(obj["lhs"]), from_json(obj["rhs"]))
    if k == "top":
        return TOP
    if k == "bot":
        return BOT
    if k == "atom":
        return Atom(obj["op"], from_json(obj["lhs"]), from_json(obj["rhs"]))
    if k == "thr":
        return Thr(obj["var"], int(obj["level"]))
    if k == "celbound":
        return CelBound(obj["var"], obj["op"], Fraction(obj["value"]))
    if k == "slide":
        return Slide(obj["var"], obj["dir"])
    if k == "not":
        return Not(from_json(obj["arg"]))
    if k == "and":
        return And(tuple(from_json(a) for a in obj["args"]))
    if k == "or":
        return Or(tuple(from_json(a) for a in obj["args"]))
    if k == "implies":
        return Implies(from_json(obj["lhs"]), from_json(obj["rhs"]))
    if k == "property":
        return Property(from_json(obj["d"]), from_json(obj["h"]))
    if k == "step":
        return PathAtom(from_json(obj["duration"]), from_json(obj["assert"]), obj["var"], int(obj["sign"]))
    if k == "path":
        return tuple(from_json(a) for a in obj["steps"])
    if k == "triple":
        pre = obj.get("pre")
        return HoareTriple(from_json(obj["path"]), from_json(obj["post"]),
                           None if pre is None else from_json(pre), bool(obj.get("cycle")), obj.get("name", "triple"))
    if k == "network":
        return GRN(
            obj["name"],
            [Variable(v["name"], int(v["bound"])) for v in obj["variables"]],
            [Multiplex(m["name"], m["target"], from_json(m["formula"])) for m in obj["multiplexes"]],
            {from_json(c["key"]): Fraction(c["value"]) for c in obj.get("celerities", [])},
        )
    raise ValueError(f"unknown node kind {k!r}")


# --------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<op>\.\.|->|<=|>=|!=|[<>=+\-*/(){}\[\],;:])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str  # number, ident, op, eof
    text: str
    begin: int
    end: int


def _span(text: str, begin: int, end: int) -> SourceSpan:
    line = text.count("\n", 0, begin) + 1
    col = begin - (text.rfind("\n", 0, begin) + 1) + 1
    return SourceSpan(begin, end, line, col)


class _Fail(Exception):
    def __init__(self, begin, end, message):
        self.begin, self.end, self.message = begin, end, message


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise _Fail(pos, pos + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    out.append(Token("eof", "", len(text), len(text)))
    return out


_KEYWORDS = {"and", "or", "not", "top", "bot", "true", "false"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def fail(self, message, tok=None):
        tok = tok or self.tok
        raise _Fail(tok.begin, max(tok.end, tok.begin + 1), message)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self, what="identifier") -> str:
        if self.tok.kind != "ident" or self.tok.text in _KEYWORDS:
            self.fail(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        t = self.tok.text
        self.i += 1
        return t

    def integer(self) -> int:
        if self.tok.kind != "number" or not self.tok.text.isdigit():
            self.fail(f"expected integer, found {self.tok.text or 'end of input'!r}")
        t = self.tok.text
        self.i += 1
        return int(t)

    def literal(self, tok: Token) -> Fraction:
        try:
            return Fraction(tok.text)
        except ZeroDivisionError:
            self.fail("zero denominator", tok)

    def number(self) -> Fraction:
        neg = self.accept("-")
        if self.tok.kind != "number":
            self.fail(f"expected number, found {self.tok.text or 'end of input'!r}")
        x = self.literal(self.tok)
        self.i += 1
        return -x if neg else x

    # -- terms
    def term(self, mode) -> Term:
        t = self.product(mode)
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            t = Bin(op, t, self.product(mode))
        return t

    def product(self, mode) -> Term:
        t = self.factor(mode)
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            t = Bin(op, t, self.factor(mode))
        return t

    def factor(self, mode) -> Term:
        tok = self.tok
        if self.accept("-"):
            if self.tok.kind == "number":
                x = self.literal(self.tok)
                self.i += 1
                return Const(-x)
            return Neg(self.factor(mode))
        if tok.kind == "number":
            self.i += 1
            return Const(self.literal(tok))
        if self.accept("("):
            t = self.term(mode)
            self.expect(")")
            return t
        if tok.kind == "ident":
            return self.symbol(mode)
        self.fail(f"expected a term, found {tok.text or 'end of input'!r}")

    def symbol(self, mode) -> Term:
        tok = self.tok
        name = tok.text
        self.i += 1
        if name == "eta" and self.at("["):
            self.expect("[")
            v = self.ident("variable")
            self.expect("]")
            return Eta(v)
        if name.startswith("eta_") and len(name) > 4:
            return Eta(name[4:])
        if name in ("pi", "pi'") and self.at("["):
            self.expect("[")
            v = self.ident("variable")
            self.expect(",")
            k = self.integer()
            self.expect("]")
            return Pi(v, k, name == "pi'")
        if name == "C" and self.at("["):
            self.expect("[")
            v = self.ident("variable")
            if mode == "assert" and self.at("]"):
                self.expect("]")
                return _AbstractCel(v)
            self.expect(",")
            self.expect("{")
            omega = []
            if not self.at("}"):
                omega.append(self.ident("multiplex"))
                while self.accept(","):
                    omega.append(self.ident("multiplex"))
            self.expect("}")
            self.expect(",")
            n = self.integer()
            self.expect("]")
            return Cel(v, tuple(omega), n)
        if mode == "assert" and name.startswith("C_") and len(name) > 2:
            return _AbstractCel(name[2:])
        if name.startswith("T") and mode != "assert":
            return Dur(name)
        raise _Fail(tok.begin, tok.end, f"unknown identifier {name!r}")

    # -- conditions
    def cond(self, mode) -> Cond:
        lhs = self.disjunction(mode)
        if self.accept("->"):
            return Implies(lhs, self.cond(mode))
        return lhs

    def disjunction(self, mode) -> Cond:
        parts = [self.conjunction(mode)]
        while self.accept("or"):
            parts.append(self.conjunction(mode))
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self, mode) -> Cond:
        parts = [self.unary(mode)]
        while self.accept("and"):
            parts.append(self.unary(mode))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self, mode) -> Cond:
        if self.accept("not"):
            return Not(self.unary(mode))
        return self.primary(mode)

    def primary(self, mode) -> Cond:
        if self.accept("top"):
            return TOP
        if self.accept("bot"):
            return BOT
        if mode == "assert" and self.tok.kind == "ident" and self.tok.text == "slide":
            self.i += 1
            direction = ""
            if self.at("+") or self.at("-"):
                direction = self.tok.text
                self.i += 1
            self.expect("(")
            v = self.ident("variable")
            self.expect(")")
            return Slide(v, direction)
        if mode == "mux":
            if self.accept("("):
                c = self.cond(mode)
                self.expect(")")
                return c
            v = self.ident("variable")
            self.expect(">=")
            return Thr(v, self.integer())
        if self.at("("):
            save = self.i
            try:
                return self.atom(mode)
            except _Fail as first:
                self.i = save
                self.expect("(")
                try:
                    c = self.cond(mode)
                    self.expect(")")
                except _Fail as second:
                    raise max(first, second, key=lambda e: e.begin)
                return c
        return self.atom(mode)

    def atom(self, mode) -> Cond:
        lhs = self.term(mode)
        if self.tok.text not in _ASCII_OPS or self.tok.kind != "op":
            self.fail(f"expected a comparison, found {self.tok.text or 'end of input'!r}")
        op = self.tok.text
        self.i += 1
        rhs = self.term(mode)
        if mode == "assert":
            if isinstance(lhs, _AbstractCel) and isinstance(rhs, Const):
                return CelBound(lhs.var, op, rhs.value)
            if isinstance(rhs, _AbstractCel) and isinstance(lhs, Const):
                return CelBound(rhs.var, {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(op, op), lhs.value)
            self.fail("assertion atoms have the form C_v <op> constant")
        return Atom(op, lhs, rhs)

    # -- properties and paths
    def prop(self) -> Property:
        self.expect("(")
        d = self.cond("cond")
        self.expect(";")
        h = self.cond("cond")
        self.expect(")")
        return Property(d, h)

    def path_atom(self) -> PathAtom:
        self.expect("(")
        tok = self.tok
        if tok.kind == "number":
            dur = Const(self.literal(tok))
            self.i += 1
        elif tok.kind == "ident" and tok.text.startswith("T"):
            dur = Dur(tok.text)
            self.i += 1
        else:
            self.fail("duration must be a number or a symbol starting with 'T'")
        self.expect(",")
        a = self.cond("assert")
        self.expect(",")
        v = self.ident("variable")
        if self.at("+") or self.at("-"):
            sign = 1 if self.tok.text == "+" else -1
            self.i += 1
        else:
            self.fail("expected '+' or '-' after the variable")
        self.expect(")")
        return PathAtom(dur, a, v, sign)

    def path(self) -> tuple:
        atoms = []
        if self.accept(";"):
            return ()
        if self.tok.kind == "ident" and self.tok.text in ("eps", "epsilon"):
            self.i += 1
            self.accept(";")
            return ()
        while self.at("("):
            atoms.append(self.path_atom())
            if not self.accept(";"):
                break
        return tuple(atoms)


class _AbstractCel(Term):
    """Placeholder for ``C_v`` while parsing an assertion atom."""

    def __init__(self, var):
        self.var = var


def _wrap(text, fn):
    try:
        p = _Parser(text)
        value = fn(p)
        if p.tok.kind != "eof":
            p.fail(f"unexpected trailing input {p.tok.text!r}")
        return value
    except _Fail as e:
        raise ParseError([ParseDiagnostic(_span(text, e.begin, e.end), e.message)]) from None
    except RecursionError:
        raise ParseError([ParseDiagnostic(_span(text, 0, len(text)), "input nested too deeply")]) from None


def parse_formula(text: str) -> Cond:
    """Parse a property-language condition."""
    return _wrap(text, lambda p: p.cond("cond"))


def parse_term(text: str) -> Term:
    return _wrap(text, lambda p: p.term("cond"))


def parse_assertion(text: str) -> Cond:
    return _wrap(text, lambda p: p.cond("assert"))


def parse_multiplex_formula(text: str) -> Cond:
    return _wrap(text, lambda p: p.cond("mux"))


def parse_property(text: str) -> Property:
    return _wrap(text, lambda p: p.prop())


def parse_path(text: str) -> tuple:
    return _wrap(text, lambda p: p.path())


def parse_network(text: str) -> GRN:
    """Parse the network DSL; raises :class:`ParseError` with diagnostics."""

    def body(p: _Parser):
        p.expect("network")
        name = p.ident("network name")
        p.expect("{")
        variables, muxes, cels = [], [], []
        while not p.at("}"):
            start = p.tok
            if p.accept("var"):
                v = p.ident("variable name")
                p.expect(":")
                lo_tok = p.tok
                lo = p.integer()
                if lo != 0:
                    p.fail("variable ranges must start at 0", lo_tok)
                p.expect("..")
                variables.append((Variable(v, p.integer()), start))
                p.expect(";")
            elif p.accept("multiplex"):
                m = p.ident("multiplex name")
                p.expect("->")
                target = p.ident("target variable")
                p.expect("{")
                f = p.cond("mux")
                p.expect("}")
                p.accept(";")
                muxes.append((Multiplex(m, target, f), start))
            elif p.accept("celerity"):
                key = p.symbol("cond") if p.tok.kind == "ident" else p.fail("expected C[...]")
                if not isinstance(key, Cel):
                    p.fail("expected a celerity symbol C[v,{...},n]", start)
                p.expect("=")
                cels.append((key, p.number(), start))
                p.expect(";")
            else:
                p.fail(f"expected 'var', 'multiplex' or 'celerity', found {p.tok.text or 'end of input'!r}")
        p.expect("}")
        return name, variables, muxes, cels

    name, variables, muxes, cels = _wrap(text, body)
    diags = []
    vnames = {v.name for v, _ in variables}
    mtargets = {m.name: m.target for m, _ in muxes}
    for key, _, tok in cels:
        if key.var not in vnames:
            diags.append(ParseDiagnostic(_span(text, tok.begin, tok.end), f"unknown variable {key.var}"))
        for m in key.omega:
            if m not in mtargets:
                diags.append(ParseDiagnostic(_span(text, tok.begin, tok.end), f"unknown multiplex {m}"))
            elif mtargets[m] != key.var:
                diags.append(ParseDiagnostic(_span(text, tok.begin, tok.end),
                                             f"multiplex {m} does not target {key.var}"))
    if diags:
        raise ParseError(diags)
    grn = GRN(name, [v for v, _ in variables], [m for m, _ in muxes], {k: x for k, x, _ in cels})
    problems = validate(grn)
    if problems:
        whole = _span(text, 0, len(text))
        raise ParseError([ParseDiagnostic(whole, msg) for msg in problems])
    return grn


def parse_celerities(text: str) -> dict:
    """Parse a celerity file: ``celerity C[v,{...},n] = x;`` lines or a JSON object.

    The JSON form maps ``"C[v,{...},n]"`` strings to numbers.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
            return {parse_term(k): Fraction(str(x)) for k, x in data.items()}
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError([ParseDiagnostic(_span(text, 0, len(text)), f"bad celerity map: {e}")]) from e

    def body(p: _Parser):
        out = {}
        while p.tok.kind != "eof":
            p.accept("celerity")
            key = p.symbol("cond") if p.tok.kind == "ident" else p.fail("expected C[...]")
            if not isinstance(key, Cel):
                p.fail("expected a celerity symbol")
            p.expect("=")
            out[key] = p.number()
            p.expect(";")
        return out

    return _wrap(text, body)


def _check_names(grn: GRN, node, text, diags):
    names = set(grn.var_names)
    for n in walk(node):
        var = getattr(n, "var", None)
        if isinstance(n, (Eta, Pi, Cel, Slide, CelBound)) and var not in names:
            diags.append(ParseDiagnostic(_span(text, 0, len(text)), f"unknown variable {var}"))


def parse_triple(text: str, grn: GRN | None = None) -> HoareTriple:
    """Parse a triple file (``triple name { ... }``) or its bare body."""

    def items(p: _Parser, name):
        pre, path, post, cycle = None, (), None, False
        seen = set()
        while p.tok.kind != "eof" and not p.at("}"):
            key_tok = p.tok
            key = p.ident("'pre', 'path', 'post' or 'cycle'")
            if key in seen:
                p.fail(f"duplicate {key!r} entry", key_tok)
            seen.add(key)
            p.expect(":")
            if key == "pre":
                pre = p.prop()
                p.accept(";")
            elif key == "post":
                post = p.prop()
                p.accept(";")
            elif key == "path":
                path = p.path()
            elif key == "cycle":
                if p.accept("true"):
                    cycle = True
                elif not p.accept("false"):
                    p.fail("expected true or false")
                p.accept(";")
            else:
                p.fail(f"unknown triple entry {key!r}", key_tok)
        if post is None:
            p.fail("missing 'post' entry")
        return HoareTriple(path, post, pre, cycle, name)

    def body(p: _Parser):
        if p.accept("triple"):
            name = p.ident("triple name")
            p.expect("{")
            t = items(p, name)
            p.expect("}")
            return t
        return items(p, "triple")

    triple = _wrap(text, body)
    if grn is not None:
        diags = []
        for a in triple.path:
            if a.var not in grn.var_names:
                diags.append(ParseDiagnostic(_span(text, 0, len(text)), f"unknown variable {a.var} in path"))
            _check_names(grn, a.assertion, text, diags)
        for prop in (triple.pre, triple.post):
            if prop is not None:
                _check_names(grn, prop.d, text, diags)
                _check_names(grn, prop.h, text, diags)
        if diags:
            raise ParseError(diags)
    for prop in (triple.pre, triple.post):
        if prop is not None and not is_discrete(prop.d):
            raise ParseError([ParseDiagnostic(_span(text, 0, len(text)),
                                              "discrete part of a property may only use eta atoms")])
    return triple

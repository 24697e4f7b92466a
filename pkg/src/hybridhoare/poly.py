"""Sparse polynomials over symbol terms with rational coefficients.

A polynomial is a dict from monomials to non-zero Fractions; a monomial is a
sorted tuple of ``(symbol, power)`` pairs (the empty tuple is the constant).
"""
from __future__ import annotations

from fractions import Fraction

from .logic import Bin, Cel, Const, Dur, Eta, Neg, Pi, Term

_TYPE_RANK = {Eta: 0, Pi: 1, Cel: 2, Dur: 3}


def sym_key(s) -> tuple:
    if isinstance(s, Eta):
        return (0, s.var)
    if isinstance(s, Pi):
        return (1, s.var, s.index, s.entering)
    if isinstance(s, Cel):
        return (2, s.var, s.omega, s.level)
    if isinstance(s, Dur):
        digits = "".join(ch for ch in s.name if ch.isdigit())
        return (3, int(digits) if digits else -1, s.name)
    raise TypeError(s)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    powers = {}
    for s, p in a + b:
        powers[s] = powers.get(s, 0) + p
    return tuple(sorted(powers.items(), key=lambda sp: sym_key(sp[0])))


def _clean(p: dict) -> dict:
    return {m: c for m, c in p.items() if c != 0}


def padd(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0) + scale * c
    return _clean(out)


def pmul(a: dict, b: dict) -> dict:
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mono_mul(ma, mb)
            out[m] = out.get(m, 0) + ca * cb
    return _clean(out)


def to_poly(t: Term):
    """Polynomial of a term, or None when it divides by a non-constant."""
    if isinstance(t, Const):
        return _clean({(): t.value})
    if isinstance(t, (Eta, Pi, Cel, Dur)):
        return {((t, 1),): Fraction(1)}
    if isinstance(t, Neg):
        p = to_poly(t.arg)
        return None if p is None else {m: -c for m, c in p.items()}
    if isinstance(t, Bin):
        a = to_poly(t.lhs)
        b = to_poly(t.rhs)
        if a is None or b is None:
            return None
        if t.op == "+":
            return padd(a, b)
        if t.op == "-":
            return padd(a, b, -1)
        if t.op == "*":
            return pmul(a, b)
        if set(b) <= {()} and b:
            return {m: c / b[()] for m, c in a.items()}
        return None
    raise TypeError(t)


def is_constant(p: dict) -> bool:
    return set(p) <= {()}


def constant_value(p: dict) -> Fraction:
    return p.get((), Fraction(0))


def poly_symbols(p: dict) -> set:
    return {s for m in p for s, _ in m}


def mono_key(m: tuple) -> tuple:
    # higher degree first, then symbol order; constant last
    return (-sum(pw for _, pw in m), [(sym_key(s), -pw) for s, pw in m])


def ordered_monomials(p: dict) -> list:
    return sorted(p, key=mono_key)


def leading_coefficient(p: dict) -> Fraction:
    mons = ordered_monomials(p)
    return p[mons[0]] if mons else Fraction(0)


def from_poly(p: dict) -> Term:
    """Deterministic term for a polynomial (monomials in canonical order)."""
    mons = ordered_monomials(p)
    if not mons:
        return Const(0)
    out = None
    for m in mons:
        c = p[m]
        body = None
        for s, pw in m:
            for _ in range(pw):
                body = s if body is None else Bin("*", body, s)
        mag = abs(c)
        if body is None:
            piece = Const(mag)
        elif mag == 1:
            piece = body
        else:
            piece = Bin("*", Const(mag), body)
        if out is None:
            out = piece if c > 0 else Neg(piece)
        else:
            out = Bin("+" if c > 0 else "-", out, piece)
    return out


def solve_linear(p: dict, x):
    """Solve ``p = 0`` for symbol ``x`` when p is affine in x.

    Returns ``(numerator, denominator)`` polynomials with
    ``x = numerator / denominator``, or None if x does not occur linearly.
    """
    coeff, rest = {}, {}
    for m, c in p.items():
        powers = dict(m)
        pw = powers.get(x, 0)
        if pw == 0:
            rest[m] = c
        elif pw == 1:
            reduced = tuple((s, q) for s, q in m if s != x)
            coeff[reduced] = coeff.get(reduced, 0) + c
        else:
            return None
    coeff = _clean(coeff)
    if not coeff:
        return None
    return {m: -c for m, c in rest.items()}, coeff


def eval_poly(p: dict, env) -> Fraction:
    total = 0
    for m, c in p.items():
        v = c
        for s, pw in m:
            v = v * env[s] ** pw
        total = total + v
    return total

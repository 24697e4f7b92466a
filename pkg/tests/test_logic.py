from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hybridhoare.logic import (
    BOT, TOP, And, Atom, Bin, Cel, CelBound, Const, Dur, Eta, EvalError, Implies, Not, Or,
    PathAtom, Pi, Property, Slide, Thr, compare, conj, disj, eval_cond, eval_property, eval_term,
    is_discrete, substitute, symbols, thr_to_atom,
)
from strategies import conds, terms


def test_constructors_normalise():
    assert Cel("A", ("m3", "m1"), 1) == Cel("A", ("m1", "m3"), 1)
    assert Const(1).value == Fraction(1)
    assert conj() == TOP and disj() == BOT
    assert conj(TOP, Atom("=", Eta("A"), Const(1))) == Atom("=", Eta("A"), Const(1))


def test_invalid_nodes():
    with pytest.raises(ValueError):
        Atom("=>", Eta("A"), Const(0))
    with pytest.raises(ValueError):
        PathAtom(Const(-1), TOP, "A", 1)
    with pytest.raises(ValueError):
        PathAtom(Dur("T1"), TOP, "A", 0)


def test_eval_basics():
    env = {Pi("A", 0, True): Fraction(1, 4), Dur("T1"): 2, Cel("A", (), 0): Fraction(1, 2)}
    t = Bin("-", Pi("A", 0, True), Bin("*", Cel("A", (), 0), Dur("T1")))
    assert eval_term(t, env) == Fraction(-3, 4)
    assert eval_cond(Implies(BOT, Atom("=", Dur("T1"), Const(5))), env)
    with pytest.raises(EvalError):
        eval_term(Pi("B", 0), env)
    with pytest.raises(EvalError):
        eval_term(Bin("/", Const(1), Const(0)), env)
    with pytest.raises(EvalError):
        eval_cond(Slide("A"), env)


def test_float_tolerance():
    assert compare("=", 0.1 + 0.2, 0.3)
    assert not compare("=", Fraction(1, 10) + Fraction(2, 10), Fraction(3, 10) + Fraction(1, 10**20))


def test_eval_property_binds_state():
    p = Property(Atom("=", Eta("A"), Const(2)), Atom(">", Pi("B", 0, True), Const(0)))
    assert eval_property(p, {"A": 2, "B": 0}, {"A": 0, "B": Fraction(1, 2)})
    assert not eval_property(p, {"A": 1, "B": 0}, {"A": 0, "B": Fraction(1, 2)})


def test_multiplex_lowering():
    f = Not(Thr("B", 1))
    assert thr_to_atom(f) == Not(Atom(">=", Eta("B"), Const(1)))
    assert is_discrete(thr_to_atom(f))
    assert not is_discrete(CelBound("A", ">", 0))


@settings(max_examples=200, deadline=None)
@given(conds)
def test_substitution_of_absent_symbol_is_identity(f):
    assert substitute(f, {Pi("Z", 99): Const(0)}) == f


@settings(max_examples=200, deadline=None)
@given(terms, st.fractions(min_value=-3, max_value=3))
def test_substitution_commutes_with_evaluation(t, x):
    env = {s: Fraction(1, 3) for s in symbols(t)}
    for s in symbols(t):
        env2 = dict(env)
        env2[s] = x
        assert eval_term(substitute(t, {s: Const(x)}), env) == eval_term(t, env2)
        break


def test_symbols_collects_all_kinds():
    f = And((Atom("<", Eta("A"), Pi("A", 1)), Or((Atom("=", Cel("B", (), 0), Dur("T2")),))))
    assert symbols(f) == {Eta("A"), Pi("A", 1), Cel("B", (), 0), Dur("T2")}

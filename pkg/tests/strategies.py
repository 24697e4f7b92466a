"""Hypothesis strategies for random ASTs over the lacI vocabulary."""
from fractions import Fraction

from hypothesis import strategies as st

from hybridhoare.logic import (
    BOT, TOP, And, Atom, Bin, CelBound, Cel, Const, Dur, Eta, Implies, Neg, Not, Or, PathAtom, Pi,
    Property, Slide, COMPARISONS,
)

VARS = ("A", "B")
OMEGAS = {"A": ((), ("m1",), ("m3",), ("m1", "m3")), "B": ((), ("m2",))}
BOUNDS = {"A": 2, "B": 1}

fractions = st.builds(Fraction, st.integers(-20, 20), st.integers(1, 8))
nonneg = st.builds(Fraction, st.integers(0, 20), st.integers(1, 8))

etas = st.sampled_from(VARS).map(Eta)
pis = st.builds(Pi, st.sampled_from(VARS), st.integers(0, 5), st.booleans())
durs = st.integers(1, 6).map(lambda k: Dur(f"T{k}"))


@st.composite
def cels(draw):
    v = draw(st.sampled_from(VARS))
    return Cel(v, draw(st.sampled_from(OMEGAS[v])), draw(st.integers(0, BOUNDS[v])))


leaf_terms = st.one_of(fractions.map(Const), etas, pis, cels(), durs)
terms = st.recursive(
    leaf_terms,
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(Bin, st.sampled_from("+-*"), sub, sub),
    ),
    max_leaves=6,
)

atoms = st.builds(Atom, st.sampled_from(COMPARISONS), terms, terms)


def _tuple2(sub):
    return st.lists(sub, min_size=2, max_size=3).map(tuple)


conds = st.recursive(
    st.one_of(atoms, st.sampled_from([TOP, BOT])),
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(And, _tuple2(sub)),
        st.builds(Or, _tuple2(sub)),
        st.builds(Implies, sub, sub),
    ),
    max_leaves=8,
)

properties = st.builds(Property, conds, conds)

assert_leaves = st.one_of(
    st.builds(CelBound, st.sampled_from(VARS), st.sampled_from(COMPARISONS), fractions),
    st.builds(Slide, st.sampled_from(VARS), st.sampled_from(["", "+", "-"])),
    st.just(TOP),
)
assertions = st.recursive(
    assert_leaves,
    lambda sub: st.one_of(st.builds(Not, sub), st.builds(And, _tuple2(sub)), st.builds(Or, _tuple2(sub))),
    max_leaves=4,
)

path_atoms = st.builds(
    PathAtom,
    st.one_of(nonneg.map(Const), durs),
    assertions,
    st.sampled_from(VARS),
    st.sampled_from([1, -1]),
)
paths = st.lists(path_atoms, max_size=4).map(tuple)

# discrete conditions over the lacI levels (for Post generation)
discrete_atoms = st.builds(
    Atom, st.sampled_from(COMPARISONS), etas, st.integers(0, 2).map(lambda n: Const(Fraction(n)))
)
discrete_conds = st.recursive(
    st.one_of(discrete_atoms, st.just(TOP)),
    lambda sub: st.one_of(st.builds(Not, sub), st.builds(And, _tuple2(sub)), st.builds(Or, _tuple2(sub))),
    max_leaves=4,
)

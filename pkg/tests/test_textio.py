import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import GOLDEN_NAMES, fixture_text, golden, lac, osc
from hybridhoare.logic import (
    TOP, And, Atom, CelBound, Const, Dur, Eta, HoareTriple, PathAtom, Pi, Property, Slide,
)
from hybridhoare.model import validate
from hybridhoare.textio import (
    ParseError, from_json, parse_assertion, parse_celerities, parse_formula, parse_network,
    parse_path, parse_property, parse_triple, render_formula, render_network, render_path,
    render_triple, to_json,
)
from strategies import assertions, conds, paths, properties, terms


def test_lac_network():
    grn = lac()
    assert [(v.name, v.bound) for v in grn.variables] == [("A", 2), ("B", 1)]
    assert {m.name: m.target for m in grn.multiplexes} == {"m1": "A", "m2": "B", "m3": "A"}
    assert validate(grn) == []


def test_single_variable_network():
    grn = parse_network("network x { var A : 0..1; }")
    assert grn.var_names == ["A"]
    assert grn.multiplexes == ()
    keys = grn.celerity_keys()
    assert len(keys) == 2
    assert all(grn.celerity(k) is None for k in keys)


def test_unknown_multiplex_in_celerity():
    with pytest.raises(ParseError) as e:
        parse_network("network x { var A : 0..1; celerity C[A,{m9},0] = 1; }")
    assert "unknown multiplex m9" in str(e.value)
    assert e.value.diagnostics[0].span.begin <= e.value.diagnostics[0].span.end


def test_oscillation_triple():
    t = osc()
    assert [(a.duration, a.assertion, a.var, a.sign) for a in t.path] == [
        (Dur("T4"), TOP, "B", 1),
        (Dur("T3"), Slide("B", "+"), "A", -1),
        (Dur("T2"), TOP, "B", -1),
        (Dur("T1"), TOP, "A", 1),
    ]
    d = And((Atom("=", Eta("A"), Const(2)), Atom("=", Eta("B"), Const(0))))
    assert t.post == Property(d, TOP)
    assert t.pre is None and t.cycle


def test_empty_path_triple():
    t = parse_triple("triple e { path: ; post: (top; top); }", lac())
    assert t.path == () and t.post == Property(TOP, TOP)


def test_concrete_atom():
    (a,) = parse_path("(1.5, C_A > 0.2, A+)")
    assert a == PathAtom(Const(Fraction(3, 2)), CelBound("A", ">", Fraction(1, 5)), "A", 1)


def test_unknown_variable_in_path():
    with pytest.raises(ParseError):
        parse_triple("triple e { path: (T1, top, Z+); post: (top; top); }", lac())


def test_malformed_assertion():
    with pytest.raises(ParseError):
        parse_assertion("C_A > pi[A,0]")


def test_duration_must_start_with_t():
    with pytest.raises(ParseError):
        parse_path("(X1, top, A+)")


def test_render_top_and_primes():
    assert render_formula(TOP) == "top"
    assert render_formula(Atom("=", Pi("A", 0, True), Const(0))) == "pi'[A,0] = 0"


def test_render_h1_shape():
    text = render_formula(golden("h1"), "unicode")
    assert "¬(C_{B,∅,0} > 0)" in text
    assert "π′_{A,0} = 0" in text


def test_celerity_file_forms():
    dsl = parse_celerities("celerity C[A,{m1},1] = -1/2; C[B,{},0] = 2;")
    js = parse_celerities(json.dumps({"C[A,{m1},1]": "-1/2", "C[B,{},0]": 2}))
    assert dsl == js


def _idempotent(parse, render, x):
    once = parse(render(x))
    assert parse(render(once)) == once
    return once


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_round_trip(name):
    f = golden(name)
    assert parse_formula(render_formula(f)) == f
    assert from_json(to_json(f)) == f


def test_fixture_round_trip():
    grn = lac()
    again = parse_network(render_network(grn))
    assert render_network(again) == render_network(grn)
    t = osc()
    assert parse_triple(render_triple(t), grn) == t


@settings(max_examples=1000, deadline=None)
@given(conds)
def test_formula_round_trip(f):
    once = _idempotent(parse_formula, render_formula, f)
    # the ASCII text is a fixpoint after one parse
    assert render_formula(once) == render_formula(f)
    assert from_json(json.loads(json.dumps(to_json(f)))) == f


@settings(max_examples=300, deadline=None)
@given(properties)
def test_property_round_trip(p):
    _idempotent(parse_property, render_formula, p)


@settings(max_examples=300, deadline=None)
@given(paths)
def test_path_round_trip(path):
    _idempotent(parse_path, render_path, path)
    assert from_json(to_json(path)) == path


@settings(max_examples=300, deadline=None)
@given(assertions)
def test_assertion_round_trip(a):
    _idempotent(parse_assertion, render_formula, a)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="()[]{},;:=<>!+-*/'.0123456789 aAbBCdeiklmnoprstTvxy_", max_size=40))
def test_parsing_is_total(text):
    for parse in (parse_formula, parse_assertion, parse_path, parse_property):
        try:
            parse(text)
        except ParseError as e:
            assert e.diagnostics and all(d.message for d in e.diagnostics)


@settings(max_examples=200, deadline=None)
@given(terms)
def test_term_json_round_trip(t):
    assert from_json(to_json(t)) == t


def test_triple_with_pre():
    src = fixture_text("osc.triple").replace("path:", "pre: (eta[A] = 2; top);\n  path:")
    t = parse_triple(src, lac())
    assert isinstance(t, HoareTriple) and t.pre.d == Atom("=", Eta("A"), Const(2))

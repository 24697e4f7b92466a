import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import lac, osc, osc_wp
from hybridhoare.dynamics import (
    INF, DynamicsError, HybridState, check_assertion, check_triple_sampled, continuous_successor,
    discrete_successors, knocking, simulate, sliding_variables, touch_delay, trace_json, trace_text,
    wall_status,
)
from hybridhoare.logic import BOT, TOP, And, Cel, CelBound, Not, Pi, Property, Slide
from hybridhoare.model import GRN, Variable
from hybridhoare.solve import complete_celerities, sample_models

F = Fraction


def two_vars(ca, cb, bound=1):
    """Two independent variables with constant celerities."""
    g = GRN("two", [Variable("X", bound), Variable("Y", bound)], [])
    return g.with_celerities({**{Cel("X", (), n): ca for n in range(bound + 1)},
                              **{Cel("Y", (), n): cb for n in range(bound + 1)}})


def state(x, y, px, py):
    return HybridState({"X": x, "Y": y}, {"X": px, "Y": py})


def test_touch_delay_examples():
    g = two_vars(F(1, 2), F(-1, 2))
    h = state(0, 1, F(1, 4), F(1, 4))
    assert touch_delay(g, h, "X") == F(3, 2)
    assert touch_delay(g, h, "Y") == F(1, 2)
    assert touch_delay(two_vars(0, 1), h, "X") == INF


def test_symbolic_celerity_rejected():
    with pytest.raises(DynamicsError):
        touch_delay(lac(), HybridState({"A": 0, "B": 0}, {"A": 0, "B": 0}), "A")


def test_walls():
    g = lac().with_celerities(complete_celerities(lac(), {Cel("B", (), 0): F(-1)}, random.Random(0)))
    h = HybridState({"A": 1, "B": 0}, {"A": F(1, 2), "B": F(1, 2)})
    assert wall_status(g, h, "B").external
    still = two_vars(0, 1)
    w = wall_status(still, state(0, 0, 0, 0), "X")
    assert not w.external and not w.internal
    # level 0 pushes up, level 1 pushes down: internal wall on the border
    g2 = GRN("w", [Variable("X", 1)], []).with_celerities({Cel("X", (), 0): 1, Cel("X", (), 1): -1})
    assert wall_status(g2, HybridState({"X": 0}, {"X": 0}), "X").internal
    assert sliding_variables(g2, HybridState({"X": 0}, {"X": 0})) == {"X"}


def test_knocking_examples():
    g = two_vars(F(1, 2), F(-1, 2))
    first, delta = knocking(g, state(0, 1, F(1, 4), F(1, 4)))
    assert first == {"Y"} and delta == F(1, 2)
    assert knocking(two_vars(0, 0), state(0, 0, 0, 0)) == (frozenset(), INF)
    first, delta = knocking(two_vars(1, 1), state(0, 0, 0, 0))
    assert first == {"X", "Y"} and delta == 1


def test_successors():
    g = two_vars(1, 1)
    exit_state, dt = continuous_successor(g, state(0, 0, 0, 0))
    assert exit_state == state(0, 0, 1, 1) and dt == 1
    succ = discrete_successors(g, exit_state)
    assert [(v, s) for v, s, _ in succ] == [("X", 1), ("Y", 1)]
    assert succ[0][2] == state(1, 0, 0, 1)
    assert discrete_successors(two_vars(0, 0), state(0, 0, 0, 0)) == []
    at_exit, dt = continuous_successor(g, exit_state)
    assert at_exit == exit_state and dt == 0


def test_enumerate_all_branches():
    g = two_vars(1, 1, bound=2)
    traces = simulate(g, state(0, 0, 0, 0), 2, "enumerate-all")
    firsts = sorted(t.discrete_path()[0] for t in traces)
    assert ("X", 1) in firsts and ("Y", 1) in firsts


def test_steady_initial_state():
    t = simulate(two_vars(0, 0), state(0, 0, 0, 0), 10)
    assert t.transitions == [] and t.steady
    assert "STEADY" in trace_text(t)


def _hf_instance(seed=0):
    """A concrete lacI network taken from a model of the closed-cycle formula."""
    _, closed = osc_wp()
    models, _ = sample_models(closed.h, n=1, seed=seed, grn=lac())
    m = models[0]
    g = lac().with_celerities(complete_celerities(lac(), {k: v for k, v in m.items() if isinstance(k, Cel)},
                                                  random.Random(seed)))
    return g, m


def test_limit_cycle_shape():
    g, m = _hf_instance()
    # a fast repressor reaches its ceiling well before A leaves (2,1)
    g = g.with_celerities({Cel("B", ("m2",), 1): F(10)})
    h0 = HybridState({"A": 2, "B": 0}, {"A": F(0), "B": m[Pi("B", 0, True)]})
    t = simulate(g, h0, 12)
    path = ["".join((v, "+" if s > 0 else "-")) for v, s in t.discrete_path()]
    assert path == (["B+", "A-", "B-", "A+"] * 3)[:len(path)]
    # with B pinned on its ceiling the orbit repeats exactly
    assert t.cycle is not None and t.cycle[1] > 0
    conts = [x for x in t.transitions if x.kind == "continuous"]
    for seg in conts[1::4]:
        assert seg.source.levels == {"A": 2, "B": 1}
        assert check_assertion(g, seg.source, seg.target, seg.duration, Slide("B", "+"))
        assert seg.target.frac("B") == 1
    assert t.elapsed == sum(x.duration for x in t.transitions)


def test_first_segment_duration_matches_model():
    g, m = _hf_instance(1)
    pb = m[Pi("B", 0, True)]
    h0 = HybridState({"A": 2, "B": 0}, {"A": F(0), "B": pb})
    exit_state, dt = continuous_successor(g, h0)
    assert exit_state.frac("B") == 1
    assert dt == (1 - pb) / g.celerity(Cel("B", ("m2",), 0))


def test_check_assertion_cases():
    g = two_vars(F(1, 2), F(-1, 2))
    h = state(0, 1, F(1, 4), F(1, 4))
    exit_state, dt = continuous_successor(g, h)
    assert check_assertion(g, h, exit_state, dt, TOP)
    assert not check_assertion(g, h, exit_state, dt + 1, TOP)
    assert check_assertion(g, h, exit_state, dt, CelBound("X", ">", F(1, 5)))
    assert not check_assertion(g, h, exit_state, dt, CelBound("X", ">", 1))
    with pytest.raises(DynamicsError):
        check_assertion(g, h, exit_state, -1, TOP)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_not_slide_is_negation_at_first_delay(rng):
    g = lac().with_celerities(complete_celerities(lac(), {}, rng))
    h = HybridState({"A": rng.randint(0, 2), "B": rng.randint(0, 1)},
                    {"A": F(rng.randint(0, 8), 8), "B": F(rng.randint(0, 8), 8)})
    r = continuous_successor(g, h)
    if r is None:
        return
    exit_state, dt = r
    for v in ("A", "B"):
        a = Slide(v)
        assert check_assertion(g, h, exit_state, dt, Not(a)) == (not check_assertion(g, h, exit_state, dt, a))


def random_instance(rng):
    cel = {k: float(x) for k, x in complete_celerities(lac(), {}, rng).items()}
    g = lac().with_celerities(cel)
    h = HybridState({"A": rng.randint(0, 2), "B": rng.randint(0, 1)},
                    {"A": rng.choice([0.0, 1.0, rng.random()]), "B": rng.choice([0.0, 1.0, rng.random()])})
    return g, h


def check_trace_invariants(g, t):
    prev = t.initial
    for x in t.transitions:
        assert x.source == prev
        prev = x.target
        for v in g.var_names:
            assert 0 <= x.target.frac(v) <= 1
            assert 0 <= x.target.level(v) <= g.bound(v)
        if x.kind == "continuous":
            assert x.target.levels == x.source.levels
            first, delta = knocking(g, x.source)
            assert not first & sliding_variables(g, x.source)
            for v in first:
                c = g.celerity(Cel(v, *_active(g, x.source, v)))
                assert abs(x.duration - (x.target.frac(v) - x.source.frac(v)) / c) <= 1e-12
        else:
            changed = [v for v in g.var_names if x.target.level(v) != x.source.level(v)]
            assert changed == [x.fired]
            assert x.target.level(x.fired) - x.source.level(x.fired) == x.sign
            # Rep: the fired variable jumps to the opposite border, the others stay put
            assert (x.source.frac(x.fired), x.target.frac(x.fired)) == ((1, 0) if x.sign > 0 else (0, 1))
            for v in g.var_names:
                if v != x.fired:
                    assert x.target.frac(v) == x.source.frac(v)


def _active(g, h, v):
    from hybridhoare.model import resources
    return resources(g, h.levels, v), h.level(v)


def test_simulator_invariants_random_instances():
    rng = random.Random(2024)
    steps = 0
    for _ in range(1000):
        g, h = random_instance(rng)
        t = simulate(g, h, 100, "seeded-random", seed=rng.randint(0, 10**6))
        check_trace_invariants(g, t)
        steps += len(t.transitions)
    assert steps > 1000


def test_simulator_invariants_on_oscillations():
    for seed in range(5):
        g, m = _hf_instance(seed)
        cel = {k: float(v) for k, v in g.celerities.items()}
        gf = lac().with_celerities(cel)
        h0 = HybridState({"A": 2, "B": 0}, {"A": 0.0, "B": float(m[Pi("B", 0, True)])})
        t = simulate(gf, h0, 100)
        check_trace_invariants(gf, t)
        assert len(t.discrete_path()) >= 20 or t.cycle


def test_trace_json_mirrors_text():
    g = two_vars(1, 1)
    t = simulate(g, state(0, 0, 0, 0), 1)
    js = trace_json(t)
    assert js["initial"] and len(js["steps"]) == len(t.transitions)
    assert trace_text(t).splitlines()[0] == "STATE (0,0) [0,0]"


def test_triple_unsatisfiable_pre():
    t = osc()
    v = check_triple_sampled(lac(), t, 5, pre=Property(t.post.d, BOT))
    assert v.status == "unsatisfiable-pre"


def test_weakened_pre_finds_counterexample():
    _, closed = osc_wp()
    weak = Property(closed.d, And(closed.h.args[1:]))
    v = check_triple_sampled(lac(), osc(), 50, pre=weak)
    assert v.status == "counterexample"
    assert v.counterexample["reason"]

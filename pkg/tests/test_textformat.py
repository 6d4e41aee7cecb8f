import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bwcsynth.errors import (
    BlockingState, DuplicateState, MissingRow, ParseError, ProbabilityNotOne, UnknownEdge,
    UnknownState,
)
from bwcsynth.instances import load, text
from bwcsynth.model import FiniteMemoryModel, FiniteMemoryStrategy, Measure, StochasticModel
from bwcsynth.textformat import (
    SourceSpan, parse_game, parse_model, parse_strategy, serialize_game, serialize_model,
    serialize_strategy,
)
from oracles import random_game, random_model

SIMPLE = """game shortest-path
state s1 p1
state s2 p2
state s3 p1
edge s1 s2 1
edge s2 s3 1
edge s2 s1 1
edge s1 s3 5
init s1
target s3
"""


def test_simple_encoding():
    # s3 needs a way out to be non-blocking
    g, measure = parse_game(SIMPLE.replace("init s1", "edge s3 s3 1\ninit s1"))
    assert measure is Measure.SHORTEST_PATH
    assert g.n == 3 and g.name(g.initial) == "s1"
    assert {g.name(t) for t in g.targets} == {"s3"}


def test_simple_without_target_loop_is_blocking():
    with pytest.raises(BlockingState) as info:
        parse_game(SIMPLE)
    assert info.value.span.line == 4


def test_empty_input():
    with pytest.raises(ParseError) as info:
        parse_game("")
    assert info.value.span.line == 1
    with pytest.raises(ParseError) as info:
        parse_game("# only a comment\n\n")
    assert info.value.span.line == 1


def test_unknown_state_has_span():
    with pytest.raises(UnknownState) as info:
        parse_game("game mean-payoff\nstate a p1\nedge a zz 1\ninit a\n")
    assert info.value.span == SourceSpan(3, 8, 9)


def test_duplicate_state():
    with pytest.raises(DuplicateState) as info:
        parse_game("game mean-payoff\nstate a p1\nstate a p2\n")
    assert info.value.span.line == 3


@pytest.mark.parametrize("src, line", [
    ("game longest-path\n", 1),
    ("state a p1\n", 1),
    ("game mean-payoff\nstate a p3\n", 2),
    ("game mean-payoff\nstate a p1\nedge a a x\n", 3),
    ("game mean-payoff\nstate a p1\nedge a a 1 lbl x\n", 3),
    ("game mean-payoff\nfoo\n", 2),
    ("game mean-payoff\nstate a p1\nedge a a 1\ninit a\ntarget a\n", 5),
])
def test_syntax_errors(src, line):
    with pytest.raises(ParseError) as info:
        parse_game(src)
    assert info.value.span.line == line


def test_commute_model(commute):
    g, m = commute
    st_ = g.index("station")
    assert {g.edges[e].label: p for e, p in m.rows[st_].items()} == \
        {"departs": Fraction(9, 10), "delay": Fraction(1, 10)}


def test_row_summing_to_eleven_tenths(commute):
    g, _ = commute
    src = "model memoryless\nrow station: departs 1/1, delay 1/10\nrow traffic: light 1/1\n"
    with pytest.raises(ProbabilityNotOne) as info:
        parse_model(src, g)
    assert info.value.total == Fraction(11, 10)
    assert info.value.span.line == 2


def test_missing_traffic_row(commute):
    g, _ = commute
    with pytest.raises(MissingRow) as info:
        parse_model("model memoryless\nrow station: departs 9/10, delay 1/10\n", g)
    assert info.value.state == "traffic"


def test_unknown_edge_in_row(commute):
    g, _ = commute
    with pytest.raises(UnknownEdge) as info:
        parse_model("model memoryless\nrow station: bus 1/1\n", g)
    assert info.value.span.line == 2


def test_mealy_model(simple):
    g, _ = simple
    src = """model mealy 2
mem even init
mem odd
update even s2 -> odd
update odd s2 -> even
row even s2: s3 1/4, s1 3/4
row odd s2: s3 3/4, s1 1/4
"""
    fm = parse_model(src, g)
    assert isinstance(fm, FiniteMemoryModel)
    assert fm.memory == ("even", "odd") and fm.next_memory(0, 1) == 1
    assert parse_model(serialize_model(fm, g), g) == fm


def test_mealy_model_missing_row(simple):
    g, _ = simple
    with pytest.raises(MissingRow):
        parse_model("model mealy 1\nmem x init\n", g)


def test_bicycle_strategy_is_three_lines(commute):
    g, _ = commute
    s = load("commute.g", None, "bicycle.s")[3]
    out = serialize_strategy(s, g)
    assert out.count("\n") == 3
    assert parse_strategy(out, g) == s


def test_three_delays_roundtrip(commute):
    g, _ = commute
    s = load("commute.g", None, "three_delays.s")[3]
    assert s.size == 4
    out = serialize_strategy(s, g)
    assert out.startswith("strategy 4\nmem d0 init\n")
    assert parse_strategy(out, g) == s


def test_action_naming_a_non_edge(commute):
    g, _ = commute
    with pytest.raises(ParseError) as info:
        parse_strategy("strategy 1\nmem m init\nact m home -> waiting\n", g)
    assert info.value.span == SourceSpan(3, 15, 21)


def test_strategy_header_mismatch(commute):
    g, _ = commute
    with pytest.raises(ParseError):
        parse_strategy("strategy 2\nmem m init\nact m home -> car\n", g)


def test_strategy_undefined_on_reachable_pair(commute):
    g, _ = commute
    from bwcsynth.errors import UndefinedAction
    with pytest.raises(UndefinedAction):
        parse_strategy("strategy 1\nmem m init\nact m home -> train\n", g)


def test_instances_roundtrip():
    for name in ("commute.g", "simple.g", "wec.g", "two_wecs.g"):
        g, measure = parse_game(text(name))
        assert parse_game(serialize_game(g, measure)) == (g, measure)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6), st.booleans())
def test_random_roundtrip(seed, shortest):
    rng = random.Random(seed)
    g = random_game(rng, w_lo=1 if shortest else -4, targets=shortest)
    measure = Measure.SHORTEST_PATH if shortest else Measure.MEAN_PAYOFF
    g2, m2 = parse_game(serialize_game(g, measure))
    assert (g2, m2) == (g, measure)
    m = random_model(rng, g)
    back = parse_model(serialize_model(m, g), g)
    assert {s: {e: p for e, p in r.items() if p} for s, r in back.rows.items()} == \
        {s: {e: p for e, p in r.items() if p} for s, r in m.rows.items() if r} or \
        back == m
    k = rng.randint(1, 3)
    action = {(i, s): rng.choice(g.out(s)) for i in range(k) for s in g.p1_states}
    update = {(i, e): rng.randrange(k) for i in range(k) for e in range(len(g.edges))}
    s = FiniteMemoryStrategy(tuple(f"m{i}" for i in range(k)), 0, action, update)
    r = s.restricted(g)
    again = parse_strategy(serialize_strategy(r, g), g)
    assert again.restricted(g) == r

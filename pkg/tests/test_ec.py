import itertools
import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from bwcsynth.ec import Verdict, classify_ec, ec_edges, maximal_wecs
from bwcsynth.evaluation import verify_worst_case_mp
from bwcsynth.expectation import EcRecord, mec_decomposition
from bwcsynth.instances import load
from bwcsynth.model import (
    FiniteMemoryStrategy, GameGraph, StochasticModel, apply_model, subgame,
)
from bwcsynth.worstcase import solve_mp_game
import oracles

HALF = Fraction(1, 2)


def _record(g, m):
    [rec] = mec_decomposition(apply_model(g, m))
    return rec


def test_adversarial_return_loses():
    g = GameGraph.build([("a", "p1"), ("b", "p2")],
                        [("a", "b", 0), ("b", "a", -1), ("b", "a", 1)], "a")
    m = StochasticModel({1: {1: HALF, 2: HALF}})
    c = classify_ec(g, _record(g, m), 0)
    assert c.verdict is Verdict.LOSING
    assert c.values[0] == Fraction(-1, 2)


def test_single_loop_wins():
    g = GameGraph.build([("a", "p1")], [("a", "a", 1)], "a")
    rec = EcRecord(frozenset({0}), frozenset({0}), Fraction(1))
    c = classify_ec(g, rec, 0)
    assert c.winning and c.witness == {0: 0}


def test_safe_loop_wins(wec):
    g, m = wec
    c = classify_ec(g, _record(g, m), 0)
    assert c.winning
    assert g.edges[c.witness[0]].label == "loop"


def test_maximal_wecs_whole_mec(wec):
    g, m = wec
    [w] = maximal_wecs(g, m, 0)
    assert w.states == frozenset({0, 1}) and w.value == Fraction(3, 2)


def test_maximal_wecs_after_removal():
    # b may keep sending the play back to c at cost -5; only {a} survives
    g = GameGraph.build([("a", "p1"), ("b", "p2"), ("c", "p1")],
                        [("a", "a", 1), ("a", "b", 0), ("b", "c", -5), ("b", "a", 0),
                         ("c", "b", 0)], "a")
    m = StochasticModel({1: {2: HALF, 3: HALF}})
    mdp = apply_model(g, m)
    [mec] = mec_decomposition(mdp)
    assert mec.states == {0, 1, 2}
    assert not classify_ec(g, mec, 0).winning
    [w] = maximal_wecs(g, m, 0)
    assert w.states == {0} and w.value == 1


def test_no_wec():
    g = GameGraph.build([("a", "p1")], [("a", "a", -1)], "a")
    assert maximal_wecs(g, StochasticModel({}), 0) == []


def _is_ec(g, mdp, states):
    states = set(states)
    for s in states:
        sup = [g.edges[e].dst for e in mdp.support(s)]
        if g.is_p1(s):
            if not any(d in states for d in sup):
                return False
        elif not all(d in states for d in sup):
            return False
    inner = {s: [g.edges[e].dst for e in mdp.support(s) if g.edges[e].dst in states]
             for s in states}
    import networkx as nx
    G = nx.DiGraph()
    G.add_nodes_from(states)
    G.add_edges_from((s, d) for s, ds in inner.items() for d in ds)
    return nx.is_strongly_connected(G)


def _winning(g, mdp, states, mu):
    sup = frozenset(e for s in states for e in mdp.support(s))
    return classify_ec(g, EcRecord(frozenset(states), sup, None), mu).winning


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(-2, 2))
def test_wec_soundness_maximality_disjointness(seed, mu):
    rng = random.Random(seed)
    g = oracles.random_game(rng)
    m = oracles.random_model(rng, g)
    mdp = apply_model(g, m)
    table = solve_mp_game(g)
    wecs = maximal_wecs(g, m, mu, table)
    seen = set()
    for w in wecs:
        assert not seen & w.states
        seen |= w.states
        c = classify_ec(g, w, mu)
        assert c.winning
        cert = verify_worst_case_mp(
            g, FiniteMemoryStrategy.memoryless(c.witness), mu, roots=sorted(w.states)) \
            if _closed(g, w, c.witness) else None
        if cert is not None:
            assert cert.passed
        region = {s for s in range(g.n) if table.values[s] > mu}
        for extra in range(g.n):
            if extra in w.states or extra not in region:
                continue
            bigger = w.states | {extra}
            if _is_ec(g, mdp, bigger):
                assert not _winning(g, mdp, bigger, mu)
    # every winning EC inside the worst-case region is covered by some output
    region = sorted(s for s in range(g.n) if table.values[s] > mu)
    for k in range(1, len(region) + 1):
        for subset in itertools.combinations(region, k):
            if _is_ec(g, mdp, subset) and _winning(g, mdp, subset, mu):
                assert any(set(subset) <= w.states for w in wecs)


def _closed(g, w, witness):
    # the witness can be replayed in g alone when no player-2 edge leaves w
    return all(g.edges[e].dst in w.states for s in w.states if not g.is_p1(s) for e in g.out(s))

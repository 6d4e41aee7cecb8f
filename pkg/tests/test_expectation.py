import math
import random
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from bwcsynth.evaluation import simulate
from bwcsynth.expectation import (
    chain_gains, ec_gain, expected_mp_optimal, expected_ssp_optimal, mc_expected_mp,
    mc_expected_total_cost, mec_decomposition,
)
from bwcsynth.instances import load
from bwcsynth.model import (
    FiniteMemoryStrategy, GameGraph, Measure, MarkovChain, apply_model, apply_strategy,
)
import oracles


def test_mecs(simple, commute, wec):
    for (g, m), names in [(simple, [{"s3"}]), (commute, [{"work"}]), (wec, [{"a", "b"}])]:
        mecs = mec_decomposition(apply_model(g, m))
        assert [{g.name(s) for s in r.states} for r in mecs] == names


def test_wec_instance_gain(wec):
    g, m = wec
    sol = expected_mp_optimal(apply_model(g, m))
    assert sol.values == [Fraction(3, 2)] * 2
    assert g.edges[sol.strategy[0]].label == "go"
    assert sol.mecs[0].value == Fraction(3, 2)


def test_commute_ssp(commute):
    g, m = commute
    sol = expected_ssp_optimal(apply_model(g, m), g.targets)
    assert sol.values[g.index("home")] == 33
    assert g.edges[sol.strategy[g.index("home")]].label == "car"


def test_simple_ssp(simple):
    g, m = simple
    sol = expected_ssp_optimal(apply_model(g, m), g.targets)
    assert sol.values[0] == 4
    assert g.edges[sol.strategy[0]].dst == 1


def test_chain_total_cost_examples(commute, simple):
    g, m = commute
    s = load("commute.g", None, "three_delays.s")[3]
    mc = apply_strategy(apply_model(g, m), s)
    assert mc_expected_total_cost(mc, g.targets) == Fraction(37562, 1000)
    g, m = simple
    s = load("simple.g", None, "thick.s")[3]
    assert mc_expected_total_cost(apply_strategy(apply_model(g, m), s), g.targets) == \
        Fraction(9, 2)


def test_chain_missing_target_is_infinite():
    mc = MarkovChain((0, 1, 2), (0, 1, 2),
                     (((1, Fraction(1, 2), 1), (2, Fraction(1, 2), 1)), ((1, Fraction(1), 1),),
                      ((2, Fraction(1), 0),)))
    assert mc_expected_total_cost(mc, {2}) == math.inf


def test_chain_gain_periodic():
    mc = MarkovChain((0, 1), (0, 1), (((1, Fraction(1), 4),), ((0, Fraction(1), 0),)))
    assert chain_gains(mc) == [2, 2]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mp_optimum_matches_enumeration(seed):
    rng = random.Random(seed)
    g = oracles.random_game(rng)
    m = oracles.random_model(rng, g)
    mdp = apply_model(g, m)
    sol = expected_mp_optimal(mdp)
    assert sol.values == oracles.mdp_mp_values(g, m)
    # the returned strategy attains the optimum
    chain_choice = {s: sol.strategy[s] for s in g.p1_states}
    gains = oracles.chain_gains(*oracles._chain(g, oracles.model_rows(g, m), chain_choice))
    assert [gains[s] for s in range(g.n)] == sol.values
    for rec in sol.mecs:
        assert len({sol.values[s] for s in rec.states}) == 1 or rec.value is not None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mec_gain_is_uniform(seed):
    rng = random.Random(seed)
    g = oracles.random_game(rng)
    mdp = apply_model(g, oracles.random_model(rng, g))
    for rec in mec_decomposition(mdp):
        value, strat = ec_gain(mdp, rec.states, rec.edges)
        assert value == rec.value
        assert all(g.edges[e].dst in rec.states for e in strat.values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_ssp_optimum_matches_enumeration(seed):
    rng = random.Random(seed)
    g = oracles.random_game(rng, w_lo=1, targets=True)
    m = oracles.random_model(rng, g)
    sol = expected_ssp_optimal(apply_model(g, m), g.targets)
    assert sol.values == oracles.mdp_ssp_values(g, m, g.targets)


def test_simulation_agrees_with_exact_mp(wec):
    g, m = wec
    s = FiniteMemoryStrategy.memoryless({0: 0})
    exact = mc_expected_mp(apply_strategy(apply_model(g, m), s))
    summ = simulate(g, m, s, 2000, 2000, seed=3, measure=Measure.MEAN_PAYOFF)
    assert abs(summ.mean - float(exact)) < 3 * summ.stderr + 1e-3


def test_tail_visits_stay_in_one_mec(wec):
    g, m = wec
    # random memoryless play; the tail of each run should live in one MEC
    mecs = [r.states for r in mec_decomposition(apply_model(g, m), with_values=False)]
    mdp = apply_model(g, m)
    rng = np.random.default_rng(11)
    ok = 0
    for _ in range(200):
        s, seen = g.initial, []
        for step in range(400):
            if g.is_p1(s):
                e = g.out(s)[rng.integers(len(g.out(s)))]
            else:
                row = mdp.rows[s]
                e = list(row)[rng.choice(len(row), p=[float(p) for p in row.values()])]
            s = g.edges[e].dst
            if step >= 200:
                seen.append(s)
        ok += any(set(seen) <= set(c) for c in mecs)
    assert ok >= 198

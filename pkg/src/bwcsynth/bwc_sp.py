"""Beyond-worst-case synthesis for the shortest path.

The game is unfolded with the cost paid so far (below mu), overflowing into
a single TOP level. Player 1 must stay in the attractor of the target copies
reached below mu; inside that safe region the expected cost is minimised,
and the resulting memoryless strategy of the unfolding is folded back into
a strategy of the original game whose memory is the cost counter.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidQuery
from .evaluation import exact_expectation, verify_worst_case_sp
from .expectation import expected_ssp_optimal
from .model import (
    Edge, FiniteMemoryStrategy, GameGraph, Measure, Owner, State, StochasticModel,
    SynthesisResult, apply_model, subgame, validate_game,
)
from .worstcase import attractor

TOP = "T"


@dataclass
class UnfoldedGame:
    """``game`` has one state per reachable pair ``pairs[i] = (s, c)`` with
    ``c`` an int below mu or TOP; ``origin[e]`` is the edge of the original
    game behind unfolded edge ``e`` (None for the self-loops closing the
    double and TOP states)."""
    game: GameGraph
    pairs: list
    origin: list
    doubles: frozenset
    tops: frozenset
    mu: int

    def index(self, s, c):
        return self.pairs.index((s, c))


def _pair_name(g, s, c):
    return f"{g.name(s)},{c}"


def unfold(g, mu, targets=None):
    """Unfold ``g`` from its initial state, tracking the cost up to ``mu``."""
    if mu < 1:
        raise InvalidQuery("mu must be >= 1")
    T = set(g.targets if targets is None else targets)
    start = (g.initial, 0)
    index = {start: 0}
    pairs = [start]
    edges, origin = [], []
    doubles, tops = set(), set()
    i = 0
    while i < len(pairs):
        s, c = pairs[i]
        if c == TOP or s in T:
            (tops if c == TOP else doubles).add(i)
            edges.append(Edge(i, i, 0))
            origin.append(None)
        else:
            for e in g.out(s):
                edge = g.edges[e]
                c2 = c + edge.weight
                nxt = (edge.dst, c2 if c2 < mu else TOP)
                if nxt not in index:
                    index[nxt] = len(pairs)
                    pairs.append(nxt)
                edges.append(Edge(i, index[nxt], edge.weight, edge.label))
                origin.append(e)
        i += 1
    states = tuple(State(_pair_name(g, s, c), g.owner(s)) for s, c in pairs)
    game = GameGraph(states, tuple(edges), 0, frozenset(doubles))
    return UnfoldedGame(game, pairs, origin, frozenset(doubles), frozenset(tops), mu)


@dataclass
class SafeSubgame:
    """Safe region of an unfolding and the subgame it induces.

    ``state_map``/``edge_map`` send indices of ``game`` back to the unfolding.
    ``game`` is None when the region does not contain the initial state.
    """
    region: frozenset
    game: GameGraph
    state_map: list
    edge_map: list


def safe_region(u):
    """Attractor of the double states, keeping for player 1 only the edges
    that stay in it."""
    ug = u.game
    region = attractor(ug, u.doubles, Owner.P1)
    keep = [e for e, edge in enumerate(ug.edges)
            if edge.src in region and edge.dst in region]
    if ug.initial not in region:
        return SafeSubgame(frozenset(region), None, [], [])
    sub, smap, emap = subgame(ug, region, keep)
    return SafeSubgame(frozenset(region), sub, smap, emap)


def _project_model(g, m, u, safe):
    """Rows of ``m`` carried over to the stochastic states of the safe subgame."""
    mdp_g = apply_model(g, m)
    sub = safe.game
    rows = {}
    for i in sub.p2_states:
        s, c = u.pairs[safe.state_map[i]]
        if safe.state_map[i] in u.doubles:
            continue
        row = {}
        for e in sub.out(i):
            ge = u.origin[safe.edge_map[e]]
            p = mdp_g.rows[s].get(ge)
            if p:
                row[e] = p
        rows[i] = row
    return StochasticModel(rows)


def fold_back(g, u, safe, choice):
    """Strategy of ``g`` playing ``choice`` (memoryless on the safe subgame).

    Memory holds the cost paid so far; once a target is reached it moves to
    ``done`` where the lowest-index edge is played.
    """
    T = {u.pairs[d][0] for d in u.doubles}
    sub = safe.game
    counters = sorted({u.pairs[safe.state_map[i]][1] for i in range(sub.n)
                       if safe.state_map[i] not in u.doubles})
    names = [f"c{c}" for c in counters] + ["done"]
    pos = {c: k for k, c in enumerate(counters)}
    done = len(names) - 1
    action, update = {}, {}
    for i, e in choice.items():
        ui = safe.state_map[i]
        if ui in u.doubles:
            continue
        s, c = u.pairs[ui]
        action[(pos[c], s)] = u.origin[safe.edge_map[e]]
    for i in range(sub.n):
        ui = safe.state_map[i]
        if ui in u.doubles:
            continue
        s, c = u.pairs[ui]
        for e in sub.out(i):
            ge = u.origin[safe.edge_map[e]]
            d, c2 = u.pairs[safe.state_map[sub.edges[e].dst]]
            update[(pos[c], ge)] = done if d in T else pos[c2]
    for s in g.p1_states:
        action[(done, s)] = g.out(s)[0]
    initial = done if g.initial in T else pos[0]
    return FiniteMemoryStrategy(tuple(names), initial, action, update).restricted(g)


def _compact(strategy, g):
    """Drop memory elements that are never reached."""
    used = sorted({m for m, _ in strategy.reachable(g)})
    new = {m: k for k, m in enumerate(used)}
    return FiniteMemoryStrategy(
        tuple(strategy.memory[m] for m in used), new[strategy.initial],
        {(new[m], s): e for (m, s), e in strategy.action.items() if m in new},
        {(new[m], e): new[t] for (m, e), t in strategy.update.items() if m in new})


def synthesize_bwc_sp(g, m, targets, mu, nu, strict=True):
    """Strategy reaching ``targets`` with cost < mu against every adversary and
    expected cost < nu against ``m``.

    With ``strict=False`` the thresholds become cost <= mu and expectation
    <= nu (integer costs make the first one cost < mu + 1).
    """
    if mu < 1:
        raise InvalidQuery("mu must be >= 1")
    nu = Fraction(nu)
    T = frozenset(targets)
    if not T:
        raise InvalidQuery("target set is empty")
    validate_game(g, Measure.SHORTEST_PATH)
    bound = mu if strict else mu + 1
    u = unfold(g, bound, T)
    safe = safe_region(u)
    details = {"unfolded_states": u.game.n, "safe_states": len(safe.region), "mu_used": bound}
    if safe.game is None:
        return SynthesisResult(False, "worst case", details=details)
    sub = safe.game
    targets_sub = {i for i in range(sub.n) if safe.state_map[i] in u.doubles}
    mdp = apply_model(sub, _project_model(g, m, u, safe))
    sol = expected_ssp_optimal(mdp, targets_sub)
    best = sol.values[sub.initial]
    details["optimal_expectation"] = best
    ok = best < nu if strict else best <= nu
    strategy = _compact(fold_back(g, u, safe, sol.strategy), g)
    cert = verify_worst_case_sp(g, strategy, T, bound)
    exp = exact_expectation(g, m, strategy, Measure.SHORTEST_PATH, T)
    if not cert.passed or exp != best:
        raise AssertionError(f"folded strategy failed certification: {cert.worst_case}, {exp}")
    details.update({"witness": cert.witness, "memory": strategy.size})
    if not ok:
        return SynthesisResult(False, "expectation", details=details)
    return SynthesisResult(True, "ok", strategy, cert.worst_case, exp, details)


__all__ = ["TOP", "UnfoldedGame", "unfold", "SafeSubgame", "safe_region", "fold_back",
           "synthesize_bwc_sp"]

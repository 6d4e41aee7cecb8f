"""Expected-value solvers for MDPs and exact evaluation of Markov chains.

Everything is computed with Fractions. Optimisation is by policy iteration
(multichain for the mean-payoff, proper-policy iteration for the stochastic
shortest path); each policy is evaluated with exact linear solves.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import reachable, sccs
from .linalg import solve_fixed_point, solve_sparse

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class EcRecord:
    """End component: its states, internal edges and optimal inside gain.

    ``strategy`` is a memoryless choice for the player-1 states that stays
    inside the component and attains ``value``.
    """
    states: frozenset
    edges: frozenset
    value: Fraction
    strategy: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass
class MdpSolution:
    values: list
    strategy: dict
    mecs: list = field(default_factory=list)


# -- generic action model ----------------------------------------------------
#
# actions[s] is a list of (tag, reward, ((succ, prob), ...)). For player-1
# states the tag is the edge index; stochastic states have one action whose
# tag is None and whose reward is the expected edge weight.

def _mdp_actions(mdp, states=None, edges=None):
    g = mdp.game
    states = range(g.n) if states is None else states
    actions = {}
    for s in states:
        if g.is_p1(s):
            es = g.out(s) if edges is None else [e for e in g.out(s) if e in edges]
            actions[s] = [(e, Fraction(g.edges[e].weight), ((g.edges[e].dst, _ONE),))
                          for e in es]
        else:
            reward = _ZERO
            succ = {}
            for e, p in mdp.rows[s].items():
                reward += p * g.edges[e].weight
                d = g.edges[e].dst
                succ[d] = succ.get(d, _ZERO) + p
            actions[s] = [(None, reward, tuple(sorted(succ.items())))]
    return actions


def _bottom_components(nodes, succ):
    """Split ``nodes`` of a Markov chain into bottom SCCs and transient states."""
    order = sorted(nodes)
    pos = {v: i for i, v in enumerate(order)}
    adj = [[pos[u] for u in succ[v]] for v in order]
    comps = sccs(len(order), adj)
    comp_of = {}
    for c, comp in enumerate(comps):
        for i in comp:
            comp_of[i] = c
    bottoms, transient = [], []
    for c, comp in enumerate(comps):
        if all(comp_of[j] == c for i in comp for j in adj[i]):
            bottoms.append(sorted(order[i] for i in comp))
        else:
            transient.extend(order[i] for i in comp)
    return bottoms, transient


def _evaluate_gain_bias(nodes, rows, reward):
    """Gain and bias of a Markov chain restricted to the closed set ``nodes``.

    ``rows[s]`` is a tuple of (succ, prob). The bias is pinned to 0 at the
    smallest state of each recurrent class.
    """
    succ = {s: [u for u, _ in rows[s]] for s in nodes}
    bottoms, transient = _bottom_components(nodes, succ)
    gain, bias = {}, {}
    for comp in bottoms:
        ref = comp[0]
        eqs = []
        for s in comp:
            c = {"gain": _ONE}
            if s != ref:
                c[s] = _ONE
            for u, p in rows[s]:
                if u != ref:
                    c[u] = c.get(u, _ZERO) - p
            eqs.append((c, reward[s]))
        sol = solve_sparse(eqs)
        for s in comp:
            gain[s] = sol["gain"]
            bias[s] = sol.get(s, _ZERO) if s != ref else _ZERO
    if transient:
        gsys = {s: (_ZERO, dict(rows[s])) for s in transient}
        gain.update(solve_fixed_point(gsys, gain))
        hsys = {s: (reward[s] - gain[s], dict(rows[s])) for s in transient}
        bias.update(solve_fixed_point(hsys, bias))
    return gain, bias


def _multichain_pi(actions, policy=None):
    """Maximise the expected mean-payoff by multichain policy iteration.

    ``policy`` maps states to action positions (defaults to the first action).
    A switch only happens on strict improvement, first of the gain lookahead
    and then of the bias lookahead, and picks the lowest-positioned maximiser.
    """
    nodes = list(actions)
    policy = {s: 0 for s in nodes} if policy is None else dict(policy)
    while True:
        rows = {s: actions[s][policy[s]][2] for s in nodes}
        reward = {s: actions[s][policy[s]][1] for s in nodes}
        gain, bias = _evaluate_gain_bias(nodes, rows, reward)
        changed = False
        for s in nodes:
            look = [sum(p * gain[u] for u, p in a[2]) for a in actions[s]]
            best = max(look)
            if look[policy[s]] < best:
                policy[s] = look.index(best)
                changed = True
        if changed:
            continue
        for s in nodes:
            look = [sum(p * gain[u] for u, p in a[2]) for a in actions[s]]
            cur = look[policy[s]]
            cands = [i for i, x in enumerate(look) if x == cur]
            val = {i: actions[s][i][1] + sum(p * bias[u] for u, p in actions[s][i][2])
                   for i in cands}
            best = max(val.values())
            if val[policy[s]] < best:
                policy[s] = min(i for i in cands if val[i] == best)
                changed = True
        if not changed:
            return gain, bias, policy


def _tags(actions, policy):
    return {s: actions[s][i][0] for s, i in policy.items() if actions[s][i][0] is not None}


# -- end components ----------------------------------------------------------

def _partition(comp_of):
    groups = {}
    for s, c in comp_of.items():
        groups.setdefault(c, set()).add(s)
    return {frozenset(x) for x in groups.values()}


def mec_decomposition(mdp, states=None, with_values=True):
    """Maximal end components of ``mdp`` (optionally inside ``states``).

    Repeatedly splits the candidate set into SCCs of the support graph and
    removes states that cannot stay inside their SCC: stochastic states with
    a successor outside it and player-1 states without an internal edge.
    """
    g = mdp.game
    alive = set(range(g.n)) if states is None else set(states)
    comp_of = {s: 0 for s in alive}
    while True:
        # internal edges w.r.t. the current partition
        succ = [[] for _ in range(g.n)]
        for s in alive:
            for e in mdp.support(s):
                d = g.edges[e].dst
                if d in alive and comp_of[d] == comp_of[s]:
                    succ[s].append(d)
        comps = sccs(g.n, succ, sorted(alive))
        new_comp = {}
        for c, comp in enumerate(comps):
            for s in comp:
                new_comp[s] = c
        removed = set()
        for s in alive:
            inner = [g.edges[e].dst for e in mdp.support(s)]
            inside = [d for d in inner if d in alive and new_comp[d] == new_comp[s]]
            if mdp.is_stochastic(s):
                if len(inside) != len(inner):
                    removed.add(s)
            elif not inside:
                removed.add(s)
        if not removed and _partition(new_comp) == _partition(comp_of):
            break
        alive -= removed
        comp_of = {s: new_comp[s] for s in alive}
    groups = {}
    for s in sorted(alive):
        groups.setdefault(comp_of[s], []).append(s)
    out = []
    for members in sorted(groups.values()):
        inside = set(members)
        edges = frozenset(e for s in members for e in mdp.support(s)
                          if g.edges[e].dst in inside)
        value, strat = (None, {})
        if with_values:
            value, strat = ec_gain(mdp, inside, edges)
        out.append(EcRecord(frozenset(members), edges, value, strat))
    return out


def ec_gain(mdp, states, edges):
    """Optimal expected mean-payoff when staying inside an end component."""
    actions = _mdp_actions(mdp, sorted(states), set(edges))
    gain, _, policy = _multichain_pi(actions)
    values = set(gain.values())
    if len(values) != 1:
        raise AssertionError(f"end component with non-uniform gain {values}")
    return values.pop(), _tags(actions, policy)


def expected_mp_optimal(mdp):
    """Maximal expected mean-payoff from every state, with a memoryless witness.

    The maximal end components and their inside gains are computed first;
    they determine the optimum, which the multichain policy iteration over
    the whole MDP then attains.
    """
    mecs = mec_decomposition(mdp)
    actions = _mdp_actions(mdp)
    gain, _, policy = _multichain_pi(actions)
    values = [gain[s] for s in range(mdp.game.n)]
    return MdpSolution(values, _tags(actions, policy), mecs)


def optimal_gain_actions(actions):
    """Public wrapper for the multichain solver on a custom action model."""
    gain, _, policy = _multichain_pi(actions)
    return gain, policy


# -- stochastic shortest path ------------------------------------------------

def almost_sure_reach(mdp, targets, states=None):
    """States from which player 1 reaches ``targets`` with probability one.

    Returns ``(region, choice)`` where ``choice`` is a memoryless player-1
    strategy achieving it (the edge used when the state joined the region).
    """
    g = mdp.game
    U = set(range(g.n)) if states is None else set(states)
    T = set(targets)
    while True:
        W = T & U
        choice = {}
        grew = True
        while grew:
            grew = False
            for s in sorted(U - W):
                if g.is_p1(s):
                    for e in g.out(s):
                        if g.edges[e].dst in W:
                            choice[s] = e
                            W.add(s)
                            grew = True
                            break
                else:
                    sup = [g.edges[e].dst for e in mdp.support(s)]
                    if all(d in U for d in sup) and any(d in W for d in sup):
                        W.add(s)
                        grew = True
        if W == U:
            return U, choice
        U = W


def expected_ssp_optimal(mdp, targets):
    """Minimal expected cost to reach ``targets``; ``math.inf`` where unreachable a.s.

    Weights must be positive. Policy iteration starts from the proper policy
    of the almost-sure reachability analysis, only switches on strict
    improvement and finally settles ties on the lowest edge index.
    """
    g = mdp.game
    T = set(targets)
    region, choice = almost_sure_reach(mdp, T)
    inner = [s for s in sorted(region) if s not in T]
    allowed = {s: [e for e in g.out(s) if g.edges[e].dst in region]
               for s in inner if g.is_p1(s)}
    policy = dict(choice)

    def evaluate():
        system = {}
        for s in inner:
            if g.is_p1(s):
                e = policy[s]
                system[s] = (Fraction(g.edges[e].weight), {g.edges[e].dst: _ONE})
            else:
                const, coeffs = _ZERO, {}
                for e, p in mdp.rows[s].items():
                    const += p * g.edges[e].weight
                    d = g.edges[e].dst
                    coeffs[d] = coeffs.get(d, _ZERO) + p
                system[s] = (const, coeffs)
        return solve_fixed_point(system, {t: _ZERO for t in T})

    def q(e, x):
        return g.edges[e].weight + x[g.edges[e].dst]

    while True:
        x = evaluate()
        x.update({t: _ZERO for t in T})
        changed = False
        for s, es in allowed.items():
            best = min(q(e, x) for e in es)
            if best < q(policy[s], x):
                policy[s] = min(e for e in es if q(e, x) == best)
                changed = True
        if not changed:
            break
    for s, es in allowed.items():
        best = min(q(e, x) for e in es)
        policy[s] = min(e for e in es if q(e, x) == best)
    values = [x[s] if s in region else math.inf for s in range(g.n)]
    strategy = {s: policy.get(s, g.out(s)[0]) for s in g.p1_states}
    return MdpSolution(values, strategy)


# -- Markov chains -----------------------------------------------------------

def _chain_rows(mc):
    rows, reward = {}, {}
    for s, row in enumerate(mc.rows):
        succ = {}
        r = _ZERO
        for u, p, w in row:
            succ[u] = succ.get(u, _ZERO) + p
            r += p * w
        rows[s] = tuple(sorted(succ.items()))
        reward[s] = r
    return rows, reward


def chain_gains(mc):
    """Expected mean-payoff from every state of the chain."""
    rows, reward = _chain_rows(mc)
    gain, _ = _evaluate_gain_bias(list(range(mc.n)), rows, reward)
    return [gain[s] for s in range(mc.n)]


def mc_expected_mp(mc):
    """Exact expected mean-payoff from the initial state of ``mc``."""
    return chain_gains(mc)[mc.initial]


def mc_expected_total_cost(mc, targets):
    """Exact expected cost until the first visit of a state projecting to ``targets``.

    Returns ``math.inf`` when the target is missed with positive probability.
    """
    T = set(targets)
    hit = {s for s in range(mc.n) if mc.origin[s] in T}
    if mc.initial in hit:
        return _ZERO
    rows, reward = _chain_rows(mc)
    succ = [[] if s in hit else [u for u, _ in rows[s]] for s in range(mc.n)]
    pred = [[] for _ in range(mc.n)]
    for s in range(mc.n):
        for u in succ[s]:
            pred[u].append(s)
    can_hit = reachable(hit, pred)
    doomed = set(range(mc.n)) - can_hit
    # a state reaching a doomed state before the target misses it with p > 0
    risky = reachable(doomed, pred)
    if mc.initial in risky:
        return math.inf
    live = reachable([mc.initial], succ) - hit
    system = {s: (reward[s], dict(rows[s])) for s in live}
    return solve_fixed_point(system, {t: _ZERO for t in hit})[mc.initial]

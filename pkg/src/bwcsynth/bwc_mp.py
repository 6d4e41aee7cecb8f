"""Beyond-worst-case synthesis for the mean-payoff.

Inside a winning end component the strategy alternates two phases. Phase a
plays the expectation-optimal memoryless strategy for K steps while summing
``w - mu``; if that sum is positive phase a starts over, otherwise phase b
plays the worst-case strategy of the component for L steps. Outside the
components a transient controller steers towards the component chosen by an
auxiliary MDP and gives up after N steps, switching to the global worst-case
strategy. Every emitted strategy is verified exactly before it is returned.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ec import classify_ec, ec_edges, maximal_wecs
from .errors import CalibrationBudgetExceeded, NotAWec
from .evaluation import verify_worst_case_mp
from .expectation import ec_gain, mc_expected_mp, optimal_gain_actions
from .graph import cycle_means_by_node, sccs
from .model import FiniteMemoryStrategy, SynthesisResult, apply_model, apply_strategy
from .worstcase import solve_mp_game

log = logging.getLogger(__name__)

FALLBACK = "w"


@dataclass(frozen=True)
class CombinedStrategyParams:
    K: int
    L: int

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be positive")


def memory_bound(K, L, W):
    """Memory needed by the combined strategy: phase-a pairs (step, Sum) plus
    the L steps of phase b."""
    return K * (2 * K * W + 1) + L


@dataclass
class WecGame:
    """One winning end component together with its two memoryless strategies.

    Weights are compared to ``mu`` through the integer steps ``w*q - p`` where
    ``mu = p/q``; ``W`` bounds their absolute value and ``margin`` is the
    worst-case cycle mean of ``sigma_w`` inside the component minus ``mu``.
    """
    game: object
    mdp: object
    ec: object
    mu: Fraction
    sigma_e: dict
    sigma_w: dict
    fallback: dict
    internal: frozenset
    margin: Fraction
    W: int

    @property
    def gain(self):
        return self.ec.value

    def step_value(self, e):
        mu = self.mu
        return self.game.edges[e].weight * mu.denominator - mu.numerator


def wec_game(g, m, ec, mu, table=None):
    """Prepare ``ec`` for the combined strategy; NotAWec if it is losing."""
    mu = Fraction(mu)
    verdict = classify_ec(g, ec, mu)
    if not verdict.winning:
        raise NotAWec(f"end component {sorted(g.name(s) for s in ec.states)} "
                      f"does not guarantee mean-payoff > {mu}")
    mdp = apply_model(g, m)
    if ec.value is None or set(ec.strategy) != {s for s in ec.states if g.is_p1(s)}:
        value, strat = ec_gain(mdp, ec.states, ec.edges)
        ec = type(ec)(ec.states, ec.edges, value, strat)
    table = solve_mp_game(g) if table is None else table
    internal = frozenset(ec_edges(g, ec.states, ec.edges))
    local = []
    for s in sorted(ec.states):
        es = [verdict.witness[s]] if g.is_p1(s) else [e for e in g.out(s) if e in internal]
        local += [(s, g.edges[e].dst, g.edges[e].weight) for e in es]
    means = cycle_means_by_node(g.n, local)
    margin = min(means[s] for s in ec.states) - mu
    W = max(abs(g.edges[e].weight * mu.denominator - mu.numerator) for e in internal)
    return WecGame(g, mdp, ec, mu, dict(ec.strategy), dict(verdict.witness),
                   dict(table.p1), internal, margin, max(W, 1))


class CombinedMachine:
    """The phase machine of one component, as functions on memory labels.

    Labels are ``("a", step, Sum)``, ``("b", step)`` and ``FALLBACK``; any
    move the model cannot produce (leaving the component or a
    zero-probability edge) sends the memory to ``FALLBACK``.
    """

    def __init__(self, wec, params):
        self.wec = wec
        self.K, self.L = params.K, params.L
        self.start = ("a", 0, 0)

    def act(self, mem, s):
        if mem == FALLBACK:
            return self.wec.fallback[s]
        if mem[0] == "a":
            return self.wec.sigma_e[s]
        return self.wec.sigma_w[s]

    def step(self, mem, e):
        if mem == FALLBACK or e not in self.wec.internal:
            return FALLBACK
        if mem[0] == "a":
            i, total = mem[1] + 1, mem[2] + self.wec.step_value(e)
            if i < self.K:
                return ("a", i, total)
            return self.start if total > 0 else ("b", 0)
        j = mem[1] + 1
        return ("b", j) if j < self.L else self.start


def _label(mem):
    if mem == FALLBACK:
        return FALLBACK
    if mem[0] == "t":
        return f"t{mem[1]}"
    if mem[0] == "c":
        return f"c{mem[1]}.{_label(mem[2])}"
    if mem[0] == "a":
        return f"a{mem[1]}.{mem[2]}"
    return f"b{mem[1]}"


def materialize(g, roots, start, act, step, label=_label):
    """Turn a machine given as functions into a FiniteMemoryStrategy.

    Only (memory, state) pairs reachable from ``(start, root)`` against an
    arbitrary adversary are explored.
    """
    mem_index = {start: 0}
    memory = [start]
    seen = set()
    stack = [(start, r) for r in roots]
    action, update = {}, {}
    while stack:
        mem, s = stack.pop()
        if (mem, s) in seen:
            continue
        seen.add((mem, s))
        i = mem_index[mem]
        if g.is_p1(s):
            e = act(mem, s)
            action[(i, s)] = e
            moves = (e,)
        else:
            moves = g.out(s)
        for e in moves:
            nxt = step(mem, e)
            if nxt not in mem_index:
                mem_index[nxt] = len(memory)
                memory.append(nxt)
            if nxt != mem:
                update[(i, e)] = mem_index[nxt]
            stack.append((nxt, g.edges[e].dst))
    names = tuple(label(x) for x in memory)
    return FiniteMemoryStrategy(names, 0, action, update)


def combined_strategy(wec, params):
    """Combined strategy of ``wec`` as a Mealy machine playable from every
    state of the component."""
    machine = CombinedMachine(wec, params)
    return materialize(wec.game, sorted(wec.ec.states), machine.start,
                       machine.act, machine.step)


@dataclass
class Calibration:
    params: CombinedStrategyParams
    strategy: FiniteMemoryStrategy
    worst_case: Fraction
    expectation: Fraction
    tried: list = field(default_factory=list)


def _certify(wec, strategy):
    roots = sorted(wec.ec.states)
    cert = verify_worst_case_mp(wec.game, strategy, wec.mu, roots=roots)
    if not cert.passed:
        return cert.worst_case, None
    exp = min(mc_expected_mp(apply_strategy(wec.mdp, strategy, start=r)) for r in roots)
    return cert.worst_case, exp


def calibrate_KL(wec, epsilon, budget_k=64, l_doublings=6):
    """Smallest K on the schedule 1, 2, 4, ... whose combined strategy is
    certified with worst case > mu and expectation >= gain - epsilon from
    every state of the component.

    L starts at ceil((K*W + 1) / margin) and is doubled while the worst case
    fails. Raises CalibrationBudgetExceeded past ``budget_k``.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    goal = wec.gain - epsilon
    tried = []
    K = 1
    while K <= budget_k:
        L = math.ceil((K * wec.W + 1) / (wec.margin * wec.mu.denominator))
        for _ in range(l_doublings + 1):
            params = CombinedStrategyParams(K, L)
            strategy = combined_strategy(wec, params)
            worst, exp = _certify(wec, strategy)
            tried.append((K, L, worst, exp))
            log.debug("K=%d L=%d worst=%s expectation=%s", K, L, worst, exp)
            if exp is not None:
                break
            L *= 2
        if exp is not None and exp >= goal:
            return Calibration(params, strategy, worst, exp, tried)
        K *= 2
    raise CalibrationBudgetExceeded(
        f"no K <= {budget_k} reaches expectation {goal} with worst case > {wec.mu}",
        max_k=budget_k)


# -- global decision -----------------------------------------------------------

@dataclass
class MpDecision:
    decision: bool
    reason: str
    worst_value: Fraction
    e_dagger: Optional[Fraction] = None
    wecs: list = field(default_factory=list)
    table: object = None
    plan: dict = field(default_factory=dict)


def _stop_model(g, mdp, region, wecs, C):
    """Auxiliary MDP: zero rewards everywhere, plus a ``stop`` action in every
    component state leading to an absorbing state paying ``gain + C``."""
    owner = {}
    for i, w in enumerate(wecs):
        for s in w.states:
            owner[s] = i
    actions = {}
    for s in sorted(region):
        if g.is_p1(s):
            acts = [(e, Fraction(0), ((g.edges[e].dst, Fraction(1)),))
                    for e in g.out(s) if g.edges[e].dst in region]
        else:
            succ = {}
            for e, p in mdp.rows[s].items():
                d = g.edges[e].dst
                succ[d] = succ.get(d, Fraction(0)) + p
            acts = [(None, Fraction(0), tuple(sorted(succ.items())))]
        if s in owner:
            acts.append((("stop", owner[s]), Fraction(0), ((g.n + owner[s], Fraction(1)),)))
        actions[s] = acts
    for i, w in enumerate(wecs):
        actions[g.n + i] = [(None, w.value + C, ((g.n + i, Fraction(1)),))]
    return actions


def _reaches_stops_surely(actions, policy, start, n):
    succ = {s: [u for u, _ in actions[s][policy[s]][2]] for s in actions}
    seen, stack = {start}, [start]
    while stack:
        for u in succ[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    order = sorted(seen)
    pos = {v: i for i, v in enumerate(order)}
    adj = [[pos[u] for u in succ[v]] for v in order]
    for comp in sccs(len(order), adj):
        members = set(comp)
        bottom = all(u in members for i in comp for u in adj[i])
        if bottom and any(order[i] < n for i in comp):
            return False
    return True


def bwc_mp_decide(g, m, mu, nu):
    """Decide whether some finite-memory strategy has worst case > mu and
    expectation > nu.

    The answer uses the supremum of the expectations achievable by reaching
    a winning end component almost surely and then playing near its gain;
    that supremum is not attained in general, hence the strict comparison.
    """
    mu, nu = Fraction(mu), Fraction(nu)
    table = solve_mp_game(g)
    v0 = table.values[g.initial]
    if v0 <= mu:
        return MpDecision(False, "worst case", v0, table=table)
    mdp = apply_model(g, m)
    region = {s for s in range(g.n) if table.values[s] > mu}
    wecs = maximal_wecs(g, m, mu, table)
    gains = [w.value for w in wecs]
    C = 1 + max(0, -min(gains)) + (max(gains) - min(gains))
    while True:
        actions = _stop_model(g, mdp, region, wecs, C)
        gain, policy = optimal_gain_actions(actions)
        if _reaches_stops_surely(actions, policy, g.initial, g.n):
            break
        C *= 2
    e_dagger = gain[g.initial] - C
    plan = {s: actions[s][i][0] for s, i in policy.items() if s < g.n}
    ok = e_dagger > nu
    return MpDecision(ok, "ok" if ok else "expectation", v0, e_dagger, wecs, table, plan)


# -- global synthesis ----------------------------------------------------------

class GlobalMachine:
    """Transient controller, then the combined machine of the reached component.

    Memory labels: ``("t", k)`` during the first N steps, ``("c", i, mem)``
    inside component i and ``FALLBACK`` for the global worst-case strategy.
    """

    def __init__(self, g, plan, machines, fallback, N):
        self.g = g
        self.plan = plan
        self.machines = machines
        self.fallback = fallback
        self.N = N

    def _stop(self, s):
        tag = self.plan.get(s)
        if isinstance(tag, tuple) and tag[0] == "stop" and tag[1] in self.machines:
            return tag[1]
        return None

    def _enter(self, s, k):
        i = self._stop(s)
        if i is not None:
            return ("c", i, self.machines[i].start)
        if k >= self.N:
            return FALLBACK
        return ("t", k)

    @property
    def start(self):
        return self._enter(self.g.initial, 0)

    def act(self, mem, s):
        if mem == FALLBACK:
            return self.fallback[s]
        if mem[0] == "t":
            return self.plan[s]
        return self.machines[mem[1]].act(mem[2], s)

    def step(self, mem, e):
        if mem == FALLBACK:
            return FALLBACK
        if mem[0] == "t":
            return self._enter(self.g.edges[e].dst, mem[1] + 1)
        nxt = self.machines[mem[1]].step(mem[2], e)
        return FALLBACK if nxt == FALLBACK else ("c", mem[1], nxt)


def _used_components(g, mdp, plan, n):
    """Components whose stop action can be taken following ``plan``."""
    used, seen, stack = set(), {g.initial}, [g.initial]
    while stack:
        s = stack.pop()
        tag = plan.get(s)
        if isinstance(tag, tuple):
            used.add(tag[1])
            continue
        nxt = [g.edges[tag].dst] if g.is_p1(s) else [g.edges[e].dst for e in mdp.rows[s]]
        for u in nxt:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return used


def synthesize_bwc_mp(g, m, mu, nu, epsilon=None, budget_k=64, budget_n=1 << 12):
    """Synthesize and certify a strategy with worst case > mu and expectation > nu.

    The certified expectation is at least ``E - epsilon`` where ``E`` is the
    supremum computed by :func:`bwc_mp_decide`; ``epsilon`` defaults to (and
    is capped at) half the gap ``E - nu``.
    """
    mu, nu = Fraction(mu), Fraction(nu)
    dec = bwc_mp_decide(g, m, mu, nu)
    details = {"worst_value": dec.worst_value, "e_dagger": dec.e_dagger}
    if not dec.decision:
        return SynthesisResult(False, dec.reason, details=details)
    gap = dec.e_dagger - nu
    eps = gap / 2 if epsilon is None or Fraction(epsilon) >= gap else Fraction(epsilon)
    goal = dec.e_dagger - eps
    mdp = apply_model(g, m)
    used = sorted(_used_components(g, mdp, dec.plan, g.n))
    eps_w = eps
    N = max(1, g.n)
    while True:
        machines, calib = {}, {}
        for i in used:
            wec = wec_game(g, m, dec.wecs[i], mu, dec.table)
            c = calibrate_KL(wec, eps_w, budget_k)
            calib[i] = c
            machines[i] = CombinedMachine(wec, c.params)
        gm = GlobalMachine(g, dec.plan, machines, dec.table.p1, N)
        strategy = materialize(g, [g.initial], gm.start, gm.act, gm.step)
        cert = verify_worst_case_mp(g, strategy, mu)
        exp = mc_expected_mp(apply_strategy(mdp, strategy))
        log.info("N=%d eps_w=%s worst=%s expectation=%s", N, eps_w, cert.worst_case, exp)
        if cert.passed and exp >= goal and exp > nu:
            break
        if 2 * N > budget_n:
            raise CalibrationBudgetExceeded(
                f"transient budget {budget_n} exhausted (expectation {exp}, goal {goal})",
                max_k=budget_k)
        N *= 2
        eps_w /= 2
    bound = N + 1 + sum(memory_bound(c.params.K, c.params.L, machines[i].wec.W)
                        for i, c in calib.items())
    details.update({
        "epsilon": eps, "transient_steps": N, "memory_bound": bound,
        "components": {i: (c.params.K, c.params.L, c.expectation) for i, c in calib.items()},
        "witness": cert.witness,
    })
    return SynthesisResult(True, "ok", strategy.restricted(g), cert.worst_case, exp, details)


__all__ = [
    "CombinedStrategyParams", "WecGame", "wec_game", "CombinedMachine", "combined_strategy",
    "memory_bound", "Calibration", "calibrate_KL", "MpDecision", "bwc_mp_decide",
    "synthesize_bwc_mp", "materialize", "FALLBACK",
]

"""Two-player zero-sum solvers: mean-payoff games and shortest-path games."""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import cycle_means_by_node, min_cycle_mean  # noqa: F401  (re-export)
from .model import Owner

log = logging.getLogger(__name__)


@dataclass
class GameValueTable:
    """Per-state values with optimal memoryless strategies for both players.

    ``p1`` and ``p2`` map each state of the player to the chosen edge index.
    """
    values: list
    p1: dict = field(default_factory=dict)
    p2: dict = field(default_factory=dict)

    def __getitem__(self, s):
        return self.values[s]


def attractor(g, X, player=Owner.P1, edges=None):
    """States from which ``player`` can force a visit to ``X``.

    ``edges`` optionally restricts the usable edges (default: all of ``g``).
    """
    player = Owner(player)
    usable = range(len(g.edges)) if edges is None else edges
    preds = [[] for _ in range(g.n)]
    count = [0] * g.n
    for e in usable:
        edge = g.edges[e]
        preds[edge.dst].append(edge.src)
        count[edge.src] += 1
    attr = set(X)
    queue = deque(attr)
    while queue:
        t = queue.popleft()
        for s in preds[t]:
            if s in attr:
                continue
            if g.owner(s) is player:
                attr.add(s)
                queue.append(s)
            else:
                count[s] -= 1
                if count[s] == 0:
                    attr.add(s)
                    queue.append(s)
    return attr


def solve_sp_worst_case(g, targets=None):
    """Worst-case cost to reach ``targets``; ``math.inf`` outside the attractor.

    Player 1 minimises and player 2 maximises the sum of weights up to the
    first target visit. Weights must be positive, so both players' optimal
    choices are reached within ``n`` rounds of backward induction.
    """
    T = set(g.targets if targets is None else targets)
    inf = math.inf
    val = [0 if s in T else inf for s in range(g.n)]
    for _ in range(g.n + 1):
        changed = False
        new = list(val)
        for s in range(g.n):
            if s in T:
                continue
            cands = [g.edges[e].weight + val[g.edges[e].dst] for e in g.out(s)]
            v = min(cands) if g.is_p1(s) else max(cands)
            if v != val[s]:
                new[s] = v
                changed = True
        val = new
        if not changed:
            break
    p1, p2 = {}, {}
    for s in range(g.n):
        scores = [(g.edges[e].weight + val[g.edges[e].dst], e) for e in g.out(s)]
        if g.is_p1(s):
            p1[s] = min(scores, key=lambda t: (t[0], t[1]))[1]
        else:
            p2[s] = min(scores, key=lambda t: (-t[0], t[1]))[1]
    return GameValueTable(val, p1, p2)


def _k_step_values(g, ks):
    """Yield ``(k, v_k)`` for each k in ``ks``, where ``v_k`` is the k-step game value."""
    order = sorted(range(len(g.edges)), key=lambda e: (g.edges[e].src, e))
    src = np.array([g.edges[e].src for e in order], dtype=np.int64)
    dst = np.array([g.edges[e].dst for e in order], dtype=np.int64)
    w = np.array([g.edges[e].weight for e in order], dtype=np.int64)
    starts = np.searchsorted(src, np.arange(g.n))
    is_p1 = np.array([g.is_p1(s) for s in range(g.n)])
    v = np.zeros(g.n, dtype=np.int64)
    k = 0
    for target in ks:
        while k < target:
            cand = w + v[dst]
            hi = np.maximum.reduceat(cand, starts)
            lo = np.minimum.reduceat(cand, starts)
            v = np.where(is_p1, hi, lo)
            k += 1
        yield k, v


def _class_strategy(g, values, controller):
    """Memoryless strategy for ``controller`` that keeps every value class.

    Inside the class of value c the controller plays an energy game on the
    shifted weights (w - c for player 1, c - w for player 2); its choices
    follow the minimal-credit progress measure. Returns None if the given
    values are not consistent with such a strategy.
    """
    sign = 1 if controller is Owner.P1 else -1
    classes = {}
    for s, c in enumerate(values):
        classes.setdefault(c, []).append(s)
    choice = {}
    for c, members in classes.items():
        inside = set(members)
        q, p = c.denominator, c.numerator
        local = {}
        for s in members:
            es = [e for e in g.out(s) if g.edges[e].dst in inside]
            if not es:
                return None
            if g.owner(s) is not controller:
                # the opponent must not be able to escape to a better class
                for e in g.out(s):
                    if sign * (values[g.edges[e].dst] - c) < 0:
                        return None
            local[s] = es
        wt = {e: sign * (g.edges[e].weight * q - p)
              for es in local.values() for e in es}
        bound = sum(max(0, -x) for x in wt.values()) + 1
        credit = {s: 0 for s in members}
        preds = {s: [] for s in members}
        for s, es in local.items():
            for e in es:
                preds[g.edges[e].dst].append(s)

        def lift(s):
            vals = [credit[g.edges[e].dst] - wt[e] for e in local[s]]
            vals = [math.inf if credit[g.edges[e].dst] == math.inf else x
                    for e, x in zip(local[s], vals)]
            best = min(vals) if g.owner(s) is controller else max(vals)
            best = max(0, best)
            return math.inf if best > bound else best

        queue = deque(members)
        queued = set(members)
        while queue:
            s = queue.popleft()
            queued.discard(s)
            new = lift(s)
            if new != credit[s]:
                credit[s] = new
                for r in preds[s]:
                    if r not in queued:
                        queued.add(r)
                        queue.append(r)
        if any(x == math.inf for x in credit.values()):
            return None
        for s in members:
            if g.owner(s) is controller:
                choice[s] = min(local[s],
                                key=lambda e: (credit[g.edges[e].dst] - wt[e], e))
    return choice


def _guaranteed(g, choice, controller):
    """Per-state value the controller secures with the memoryless ``choice``."""
    sign = 1 if controller is Owner.P1 else -1
    edges = []
    for s in range(g.n):
        if g.owner(s) is controller:
            e = choice[s]
            edges.append((s, g.edges[e].dst, sign * g.edges[e].weight))
        else:
            for e in g.out(s):
                edges.append((s, g.edges[e].dst, sign * g.edges[e].weight))
    return [sign * m for m in cycle_means_by_node(g.n, edges)]


def _certify(g, values):
    p1 = _class_strategy(g, values, Owner.P1)
    if p1 is None:
        return None
    p2 = _class_strategy(g, values, Owner.P2)
    if p2 is None:
        return None
    lo = _guaranteed(g, p1, Owner.P1)
    hi = _guaranteed(g, p2, Owner.P2)
    if all(lo[s] >= values[s] >= hi[s] for s in range(g.n)):
        return p1, p2
    return None


def solve_mp_game(g):
    """Values of the mean-payoff game ``g`` and optimal memoryless strategies.

    k-step values ``v_k`` satisfy ``|v_k/k - v| <= 2nW/k`` and every value is a
    fraction with denominator at most n, so rounding ``v_k/k`` to the nearest
    such fraction is exact once ``k > 4 n^3 W``. Candidates are tried at
    doubling checkpoints before that bound and accepted only when both
    extracted strategies certify them through exact cycle means.
    """
    n = g.n
    W = g.max_abs_weight
    k_max = 4 * n ** 3 * W + 1
    checkpoints = []
    k = max(1, n)
    while k < k_max:
        checkpoints.append(k)
        k *= 2
    checkpoints.append(k_max)
    for k, vk in _k_step_values(g, checkpoints):
        values = [Fraction(int(x), k).limit_denominator(n) for x in vk]
        cert = _certify(g, values)
        if cert is not None:
            log.debug("mean-payoff values certified after %d steps", k)
            return GameValueTable(values, cert[0], cert[1])
    raise AssertionError("value iteration bound reached without certified strategies")


def mp_winning_region(g, mu, table=None):
    """States whose mean-payoff value is strictly above ``mu``."""
    table = solve_mp_game(g) if table is None else table
    return {s for s in range(g.n) if table.values[s] > mu}

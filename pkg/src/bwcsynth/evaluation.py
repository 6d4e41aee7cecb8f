"""Certificates for finite-memory strategies, plus a seeded simulator.

Worst-case values are obtained from the strategy x game product, where only
the adversary still has choices: the mean-payoff worst case is the minimum
cycle mean reachable in that graph, the shortest-path worst case is its
longest path to the target (infinite as soon as a cycle can be reached
before the target).
"""

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .expectation import mc_expected_mp, mc_expected_total_cost
from .graph import min_cycle_mean, reachable, sccs, shortest_path_edges
from .model import Measure, apply_model, apply_strategy

CHUNK = 10_000


@dataclass
class ProductGraph:
    """Strategy x game graph. ``nodes[i]`` is a (memory, state) pair and
    ``edges`` holds ``(src, dst, weight, game_edge)``."""
    nodes: list
    edges: list
    roots: list

    @property
    def n(self):
        return len(self.nodes)


@dataclass
class Certificate:
    """Exact worst-case (and optionally expected) value of a strategy.

    ``witness`` is a play of the product attaining ``worst_case``: a list of
    (memory, state) names, with ``cycle_start`` marking where the repeated
    part of a lasso begins (None for a finite path).
    """
    worst_case: object
    passed: bool
    threshold: object = None
    expectation: Optional[Fraction] = None
    witness: list = field(default_factory=list)
    cycle_start: Optional[int] = None


def product(g, strategy, roots=None):
    """Adversary-only product graph reachable from ``roots`` (game states).

    Player-1 nodes keep the single edge picked by the strategy, player-2
    nodes keep all their edges.
    """
    roots = [g.initial] if roots is None else list(roots)
    index = {}
    nodes = []
    for r in roots:
        key = (strategy.initial, r)
        if key not in index:
            index[key] = len(nodes)
            nodes.append(key)
    root_ids = [index[(strategy.initial, r)] for r in roots]
    edges = []
    i = 0
    while i < len(nodes):
        m, s = nodes[i]
        moves = (strategy.choose(m, s, g),) if g.is_p1(s) else g.out(s)
        for e in moves:
            edge = g.edges[e]
            key = (strategy.next_memory(m, e), edge.dst)
            if key not in index:
                index[key] = len(nodes)
                nodes.append(key)
            edges.append((i, index[key], edge.weight, e))
        i += 1
    return ProductGraph(nodes, edges, root_ids)


def _names(g, strategy, prod, ids):
    return [(strategy.memory[prod.nodes[i][0]], g.name(prod.nodes[i][1])) for i in ids]


def verify_worst_case_mp(g, strategy, mu, roots=None):
    """Worst-case mean-payoff of ``strategy``; passes iff it is > ``mu``."""
    prod = product(g, strategy, roots)
    triples = [(u, v, w) for u, v, w, _ in prod.edges]
    value, cycle = None, None
    for r in prod.roots:
        val, cyc = min_cycle_mean(prod.n, triples, start=r, witness=True)
        if value is None or val < value:
            value, cycle, root = val, cyc, r
    succ_edges = [[] for _ in range(prod.n)]
    for i, (u, v, _, _) in enumerate(prod.edges):
        succ_edges[u].append((i, v))
    # shortest stem to any node of the cycle, then rotate the cycle to start there
    stem = shortest_path_edges(succ_edges, root, {prod.edges[i][0] for i in cycle})
    path = [root] + [prod.edges[i][1] for i in stem]
    k = next(j for j, i in enumerate(cycle) if prod.edges[i][0] == path[-1])
    cycle = cycle[k:] + cycle[:k]
    loop = [prod.edges[i][1] for i in cycle]
    witness = _names(g, strategy, prod, path + loop)
    return Certificate(value, value > mu, mu, witness=witness, cycle_start=len(path) - 1)


def verify_worst_case_sp(g, strategy, targets, mu, roots=None):
    """Worst-case cost to reach ``targets``; passes iff it is < ``mu``.

    The value is infinite when a cycle is reachable before the target.
    """
    T = set(targets)
    prod = product(g, strategy, roots)
    pre = [[] for _ in range(prod.n)]
    for i, (u, v, w, _) in enumerate(prod.edges):
        if prod.nodes[u][1] not in T:
            pre[u].append((i, v))
    succ = [[v for _, v in pre[u]] for u in range(prod.n)]
    live = reachable(prod.roots, succ)
    for comp in sccs(prod.n, succ, sorted(live)):
        if len(comp) > 1 or any(v == comp[0] for v in succ[comp[0]]):
            head = comp[0]
            root = next(r for r in prod.roots if head in reachable([r], succ))
            stem = shortest_path_edges(pre, root, {head})
            inside = set(comp)
            loop_pre = [[(i, v) for i, v in pre[u] if v in inside] for u in range(prod.n)]
            back = None
            for i, v in loop_pre[head]:
                rest = shortest_path_edges(loop_pre, v, {head})
                if rest is not None:
                    back = [i] + rest
                    break
            path = [root] + [prod.edges[i][1] for i in stem]
            loop = [prod.edges[i][1] for i in back]
            return Certificate(math.inf, False, mu,
                               witness=_names(g, strategy, prod, path + loop),
                               cycle_start=len(path) - 1)
    # acyclic before the target: longest path by memoised recursion in
    # reverse topological order (Tarjan emits sinks first)
    best = {}
    arg = {}
    for comp in sccs(prod.n, succ, sorted(live)):
        u = comp[0]
        if prod.nodes[u][1] in T:
            best[u] = 0
            continue
        cands = [(prod.edges[i][2] + best[v], i) for i, v in pre[u]]
        best[u], arg[u] = max(cands, key=lambda t: (t[0], -t[1]))
    value = max(best[r] for r in prod.roots)
    root = next(r for r in prod.roots if best[r] == value)
    path = [root]
    while path[-1] in arg:
        path.append(prod.edges[arg[path[-1]]][1])
    return Certificate(value, value < mu, mu, witness=_names(g, strategy, prod, path))


def exact_expectation(g, m, strategy, measure, targets=None):
    """Exact expectation of ``strategy`` against the stochastic model ``m``."""
    measure = Measure(measure)
    chain = apply_strategy(apply_model(g, m), strategy)
    if measure is Measure.MEAN_PAYOFF:
        return mc_expected_mp(chain)
    return mc_expected_total_cost(chain, g.targets if targets is None else targets)


# -- simulation --------------------------------------------------------------

@dataclass
class SimulationSummary:
    runs: int
    mean: float
    variance: float
    stderr: float
    min: float
    max: float
    histogram: list
    censored: int
    rng: str
    seed: int
    values: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def mean_is_lower_bound(self):
        return self.censored > 0


def _chain_arrays(chain, targets):
    deg = max(len(r) for r in chain.rows)
    succ = np.zeros((chain.n, deg), dtype=np.int64)
    cum = np.full((chain.n, deg), 2.0)
    wt = np.zeros((chain.n, deg), dtype=np.int64)
    for s, row in enumerate(chain.rows):
        acc = Fraction(0)
        for j, (u, p, w) in enumerate(row):
            acc += p
            succ[s, j] = u
            cum[s, j] = float(acc)
            wt[s, j] = w
        cum[s, len(row) - 1] = 2.0  # absorb float round-off of the last bucket
        for j in range(len(row), deg):
            succ[s, j] = succ[s, len(row) - 1]
            wt[s, j] = wt[s, len(row) - 1]
    hit = np.array([o in targets for o in chain.origin]) if targets is not None else None
    return succ, cum, wt, hit


def _simulate_chunk(args):
    arrays, runs, horizon, seed_seq, initial, shortest = args
    succ, cum, wt, hit = arrays
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    cur = np.full(runs, initial, dtype=np.int64)
    total = np.zeros(runs, dtype=np.int64)
    active = np.ones(runs, dtype=bool)
    if shortest:
        active &= ~hit[cur]
    for _ in range(horizon):
        if shortest and not active.any():
            break
        u = rng.random(runs)
        idx = (u[:, None] >= cum[cur]).sum(axis=1)
        nxt = succ[cur, idx]
        w = wt[cur, idx]
        if shortest:
            total += np.where(active, w, 0)
            cur = np.where(active, nxt, cur)
            active &= ~hit[cur]
        else:
            total += w
            cur = nxt
    return total, active


def simulate(g, m, strategy, runs, horizon, seed, measure=Measure.SHORTEST_PATH,
             targets=None, jobs=1):
    """Sample ``runs`` independent plays of ``strategy`` against ``m``.

    Shortest-path runs stop at the target; runs still going after ``horizon``
    steps are counted as censored and their partial cost is included, which
    makes the mean a lower bound. Mean-payoff runs report their average
    weight over ``horizon`` steps. Runs are split into chunks of 10 000, each
    driven by its own PCG64 stream spawned from ``seed``, so the result does
    not depend on ``jobs``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    measure = Measure(measure)
    shortest = measure is Measure.SHORTEST_PATH
    T = set(g.targets if targets is None else targets)
    chain = apply_strategy(apply_model(g, m), strategy)
    arrays = _chain_arrays(chain, T if shortest else None)
    sizes = [CHUNK] * (runs // CHUNK) + ([runs % CHUNK] if runs % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(arrays, n, horizon, ss, chain.initial, shortest)
             for n, ss in zip(sizes, children)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_simulate_chunk, tasks))
    else:
        parts = [_simulate_chunk(t) for t in tasks]
    totals = np.concatenate([p[0] for p in parts])
    censored = int(sum(p[1].sum() for p in parts)) if shortest else 0
    values = totals.astype(float) if shortest else totals / float(horizon)
    if shortest or np.all(values == np.round(values)):
        hist = sorted(Counter(values.tolist()).items())
    else:
        counts, edges = np.histogram(values, bins=20)
        hist = [((float(a), float(b)), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]
    var = float(values.var(ddof=1)) if runs > 1 else 0.0
    return SimulationSummary(
        runs=runs, mean=float(values.mean()), variance=var,
        stderr=math.sqrt(var / runs), min=float(values.min()), max=float(values.max()),
        histogram=hist, censored=censored,
        rng=f"numpy PCG64 via SeedSequence.spawn (numpy {np.__version__})",
        seed=seed, values=values)

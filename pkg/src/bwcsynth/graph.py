"""Plain directed-graph algorithms on integer-labelled nodes.

Graphs are given as ``n`` and a list of ``(u, v, weight)`` triples, or as
successor lists.
"""

from collections import deque
from fractions import Fraction

import numpy as np

_INF = np.iinfo(np.int64).max // 4


def successors(n, edges):
    succ = [[] for _ in range(n)]
    for u, v, *_ in edges:
        succ[u].append(v)
    return succ


def reachable(roots, succ):
    seen = set(roots)
    queue = deque(seen)
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def sccs(n, succ, nodes=None):
    """Tarjan's algorithm, iterative. Components come out sinks first."""
    nodes = range(n) if nodes is None else nodes
    allowed = None if nodes is range(n) else set(nodes)
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if allowed is not None and w not in allowed:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _karp(k, src, dst, w):
    """Minimum cycle mean of a strongly connected graph on nodes 0..k-1."""
    D = np.full((k + 1, k), _INF, dtype=np.int64)
    D[0, 0] = 0
    for j in range(1, k + 1):
        prev = D[j - 1][src]
        cand = np.where(prev < _INF, prev + w, _INF)
        cur = np.full(k, _INF, dtype=np.int64)
        np.minimum.at(cur, dst, cand)
        D[j] = cur
    last = D[k]
    best = None
    for v in np.nonzero(last < _INF)[0]:
        col = D[:k, v]
        ok = np.nonzero(col < _INF)[0]
        ratios = (last[v] - col[ok]) / (k - ok)
        top = ratios.max()
        # exact comparison among the float-near maxima
        cands = ok[ratios >= top - 1e-9 * max(1.0, abs(top))]
        val = max(Fraction(int(last[v] - D[j, v]), k - int(j)) for j in cands)
        if best is None or val < best:
            best = val
    return best


def _tight_cycle(k, src, dst, w, value):
    """A cycle (list of local edge positions) whose mean equals ``value``."""
    p, q = value.numerator, value.denominator
    w2 = w * q - p
    d = np.zeros(k, dtype=np.int64)
    for _ in range(k):
        cand = d[src] + w2
        nd = d.copy()
        np.minimum.at(nd, dst, cand)
        if np.array_equal(nd, d):
            break
        d = nd
    tight = [[] for _ in range(k)]
    for i in np.nonzero(d[src] + w2 == d[dst])[0]:
        tight[src[i]].append(int(i))
    # any cycle of the tight subgraph has zero reweighted length
    state = [0] * k
    pos = [0] * k
    for root in range(k):
        if state[root]:
            continue
        path = []
        work = [(root, iter(tight[root]))]
        state[root], pos[root] = 1, 0
        while work:
            v, it = work[-1]
            nxt = next(it, None)
            if nxt is None:
                state[v] = 2
                work.pop()
                if path:
                    path.pop()
                continue
            u = int(dst[nxt])
            if state[u] == 1:
                return path[pos[u]:] + [nxt]
            if state[u] == 0:
                state[u], pos[u] = 1, len(work)
                path.append(nxt)
                work.append((u, iter(tight[u])))
    raise AssertionError("no tight cycle found")


def _component_cycle_mean(comp, edges, want_witness=False):
    local = {v: i for i, v in enumerate(comp)}
    sel = [i for i, (u, v, _) in enumerate(edges) if u in local and v in local]
    if not sel:
        return None, None
    src = np.array([local[edges[i][0]] for i in sel], dtype=np.int64)
    dst = np.array([local[edges[i][1]] for i in sel], dtype=np.int64)
    w = np.array([edges[i][2] for i in sel], dtype=np.int64)
    value = _karp(len(comp), src, dst, w)
    if not want_witness:
        return value, None
    cyc = _tight_cycle(len(comp), src, dst, w, value)
    return value, [sel[i] for i in cyc]


def cycle_means_by_node(n, edges):
    """For every node, the minimum mean of a cycle reachable from it (or None)."""
    succ = successors(n, edges)
    comps = sccs(n, succ)
    comp_of = {}
    for c, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = c
    internal = [[] for _ in comps]
    for i, (u, v, _) in enumerate(edges):
        if comp_of[u] == comp_of[v]:
            internal[comp_of[u]].append(i)
    best = [None] * len(comps)
    # sinks first, so successors of a component are already final
    for c, comp in enumerate(comps):
        val = None
        if internal[c]:
            val, _ = _component_cycle_mean(comp, [edges[i] for i in internal[c]])
        for v in comp:
            for x in succ[v]:
                other = best[comp_of[x]]
                if comp_of[x] != c and other is not None and (val is None or other < val):
                    val = other
        best[c] = val
    return [best[comp_of[v]] for v in range(n)]


def min_cycle_mean(n, edges, start=None, witness=False):
    """Minimum mean over cycles reachable from ``start`` (all nodes if None).

    Returns the mean as a Fraction, or None when no cycle is reachable. With
    ``witness=True`` returns ``(mean, cycle)`` where ``cycle`` lists indices
    into ``edges``.
    """
    succ = successors(n, edges)
    nodes = reachable([start], succ) if start is not None else set(range(n))
    comps = sccs(n, succ, sorted(nodes))
    comp_of = {v: c for c, comp in enumerate(comps) for v in comp}
    buckets = [[] for _ in comps]
    for i, (u, v, _) in enumerate(edges):
        cu = comp_of.get(u)
        if cu is not None and cu == comp_of.get(v):
            buckets[cu].append(i)
    best, best_cycle = None, None
    for comp, sub in zip(comps, buckets):
        if not sub:
            continue
        val, _ = _component_cycle_mean(comp, [edges[i] for i in sub])
        if best is None or val < best:
            best = val
            best_cycle = (comp, sub)
    if not witness:
        return best
    if best is None:
        return None, None
    comp, sub = best_cycle
    _, cyc = _component_cycle_mean(comp, [edges[i] for i in sub], want_witness=True)
    return best, [sub[i] for i in cyc]


def shortest_path_edges(succ_edges, start, goal_set):
    """BFS path (list of edge ids) from ``start`` to any node in ``goal_set``.

    ``succ_edges[u]`` lists ``(edge id, v)``.
    """
    if start in goal_set:
        return []
    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for e, v in succ_edges[u]:
            if v in parent:
                continue
            parent[v] = (u, e)
            if v in goal_set:
                path = []
                while parent[v] is not None:
                    u2, e2 = parent[v]
                    path.append(e2)
                    v = u2
                return path[::-1]
            queue.append(v)
    return None

"""Games, MDPs, Markov chains and finite-memory strategies.

States and edges are addressed by their position in ``GameGraph.states`` and
``GameGraph.edges``. Strategies choose *edges* rather than successor states,
so parallel edges with different weights (the three traffic outcomes of the
commute example) stay distinguishable.
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional

from .errors import (
    BlockingState, DanglingEdge, InvalidQuery, MissingRow, NonPositiveWeight,
    ProbabilityNotOne, UndefinedAction, UnknownEdge,
)


class Owner(enum.Enum):
    P1 = "p1"
    P2 = "p2"


class Measure(enum.Enum):
    MEAN_PAYOFF = "mean-payoff"
    SHORTEST_PATH = "shortest-path"


@dataclass(frozen=True)
class State:
    name: str
    owner: Owner


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    weight: int
    label: Optional[str] = None

    def describe(self, game=None):
        if game is None:
            return f"{self.src}->{self.dst}"
        return f"{game.states[self.src].name}->{game.states[self.dst].name}"


@dataclass(frozen=True)
class GameGraph:
    states: tuple
    edges: tuple
    initial: int
    targets: frozenset = frozenset()

    @classmethod
    def build(cls, states, edges, initial, targets=()):
        """Build a game from names.

        ``states`` is a sequence of ``(name, owner)`` with owner ``"p1"``/``"p2"``
        (or an :class:`Owner`); ``edges`` holds ``(src, dst, weight)`` or
        ``(src, dst, weight, label)`` tuples of state names.
        """
        st = tuple(State(name, Owner(owner)) for name, owner in states)
        index = {s.name: i for i, s in enumerate(st)}
        es = []
        for e in edges:
            src, dst, w = e[:3]
            label = e[3] if len(e) > 3 else None
            es.append(Edge(index[src], index[dst], int(w), label))
        return cls(st, tuple(es), index[initial], frozenset(index[t] for t in targets))

    @property
    def n(self):
        return len(self.states)

    @cached_property
    def _out(self):
        out = [[] for _ in self.states]
        for i, e in enumerate(self.edges):
            if 0 <= e.src < len(out):
                out[e.src].append(i)
        return tuple(tuple(x) for x in out)

    def out(self, s):
        """Indices of the edges leaving ``s``, in ascending order."""
        return self._out[s]

    @cached_property
    def _index(self):
        return {s.name: i for i, s in enumerate(self.states)}

    def index(self, name):
        return self._index[name]

    def name(self, s):
        return self.states[s].name

    def owner(self, s):
        return self.states[s].owner

    def is_p1(self, s):
        return self.states[s].owner is Owner.P1

    @property
    def p1_states(self):
        return [i for i, s in enumerate(self.states) if s.owner is Owner.P1]

    @property
    def p2_states(self):
        return [i for i, s in enumerate(self.states) if s.owner is Owner.P2]

    @property
    def max_abs_weight(self):
        return max((abs(e.weight) for e in self.edges), default=0)

    def find_edge(self, src, token):
        """Resolve an edge leaving ``src`` by label or by destination name.

        ``dst[k]`` picks the k-th (from 1) of several parallel edges to ``dst``.
        """
        by_label = [i for i in self.out(src) if self.edges[i].label == token]
        if len(by_label) == 1:
            return by_label[0]
        by_dst = [i for i in self.out(src) if self.name(self.edges[i].dst) == token]
        if len(by_dst) == 1:
            return by_dst[0]
        m = re.fullmatch(r"(.+)\[(\d+)\]", token)
        if m and not by_label and not by_dst:
            par = [i for i in self.out(src) if self.name(self.edges[i].dst) == m.group(1)]
            k = int(m.group(2))
            if 1 <= k <= len(par):
                return par[k - 1]
        if len(by_label) > 1 or len(by_dst) > 1:
            raise UnknownEdge(f"{token!r} is ambiguous at state {self.name(src)!r}")
        raise UnknownEdge(f"no edge {token!r} leaves state {self.name(src)!r}")

    def edge_token(self, e):
        """Shortest unambiguous textual reference for edge ``e`` (label or target)."""
        edge = self.edges[e]
        if edge.label is not None:
            same = [i for i in self.out(edge.src) if self.edges[i].label == edge.label]
            if len(same) == 1:
                return edge.label
        par = [i for i in self.out(edge.src) if self.edges[i].dst == edge.dst]
        if len(par) == 1:
            return self.name(edge.dst)
        return f"{self.name(edge.dst)}[{par.index(e) + 1}]"


def validate_game(g, measure=None):
    """Check the invariants of ``g`` and return it unchanged.

    Shortest-path games additionally need strictly positive weights.
    """
    measure = Measure(measure) if measure is not None else None
    n = len(g.states)
    for i, e in enumerate(g.edges):
        if not (0 <= e.src < n and 0 <= e.dst < n):
            raise DanglingEdge(i)
        if not isinstance(e.weight, int):
            raise TypeError(f"edge {i} weight must be an integer")
    if not 0 <= g.initial < n:
        raise DanglingEdge("initial")
    if any(not 0 <= t < n for t in g.targets):
        raise DanglingEdge("target")
    for s in range(n):
        if not g.out(s):
            raise BlockingState(g.name(s))
    if measure is Measure.SHORTEST_PATH:
        for i, e in enumerate(g.edges):
            if e.weight <= 0:
                raise NonPositiveWeight(e.describe(g), e.weight)
    return g


def _check_row(g, s, row, where=None):
    where = g.name(s) if where is None else where
    out = set(g.out(s))
    for e, p in row.items():
        if e not in out:
            raise UnknownEdge(f"row of {where!r} refers to edge {e} which does not leave it")
        if not isinstance(p, Fraction) or p < 0:
            raise ProbabilityNotOne(where, p)
    total = sum(row.values(), Fraction(0))
    if total != 1:
        raise ProbabilityNotOne(where, total)


@dataclass(frozen=True)
class StochasticModel:
    """Memoryless adversary model: player-2 state -> {edge index: probability}.

    Player-2 states with a single outgoing edge may be omitted (Dirac).
    """
    rows: Mapping = field(default_factory=dict)

    @classmethod
    def from_names(cls, g, rows):
        """``rows``: ``{state name: {label-or-target: probability}}``."""
        out = {}
        for name, dist in rows.items():
            s = g.index(name)
            out[s] = {g.find_edge(s, tok): Fraction(p) for tok, p in dist.items()}
        return cls(out)


@dataclass(frozen=True)
class FiniteMemoryModel:
    """Adversary model with memory.

    At state ``s`` with memory ``m`` the adversary samples from
    ``rows[(m, s)]``; leaving ``s`` moves the memory to ``update[(m, s)]``
    (unchanged when absent).
    """
    memory: tuple
    initial: int
    update: Mapping
    rows: Mapping

    def next_memory(self, m, s):
        return self.update.get((m, s), m)


@dataclass(frozen=True)
class Mdp:
    """A game whose player-2 states are stochastic, with complete rows."""
    game: GameGraph
    rows: Mapping

    def is_stochastic(self, s):
        return not self.game.is_p1(s)

    def support(self, s):
        """Edges that can be taken at ``s``: all edges for player 1, the
        positive-probability edges for stochastic states."""
        if self.game.is_p1(s):
            return self.game.out(s)
        return tuple(e for e in self.game.out(s) if self.rows[s].get(e, 0) > 0)


def apply_model(g, m):
    """Fix the adversary of ``g`` to the memoryless model ``m``."""
    rows = {}
    for s, row in m.rows.items():
        if g.is_p1(s):
            raise UnknownEdge(f"model has a row for player-1 state {g.name(s)!r}")
    for s in g.p2_states:
        row = m.rows.get(s)
        if row is None:
            if len(g.out(s)) != 1:
                raise MissingRow(g.name(s))
            row = {g.out(s)[0]: Fraction(1)}
        row = {e: Fraction(p) for e, p in row.items()}
        _check_row(g, s, row)
        rows[s] = {e: p for e, p in sorted(row.items()) if p > 0}
    return Mdp(g, rows)


@dataclass(frozen=True, eq=True)
class FiniteMemoryStrategy:
    """Deterministic Mealy machine for player 1.

    ``action[(m, s)]`` is the edge played at player-1 state ``s`` in memory
    ``m``; ``update[(m, e)]`` is the memory after edge ``e`` is taken in
    memory ``m``. Missing update entries leave the memory unchanged, and
    identity entries are dropped on construction so that equal machines
    compare equal.
    """
    memory: tuple
    initial: int
    action: Mapping
    update: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "update",
                           {k: v for k, v in self.update.items() if v != k[0]})

    @property
    def size(self):
        return len(self.memory)

    @classmethod
    def memoryless(cls, choice, name="m0"):
        """``choice``: {player-1 state: edge index}."""
        return cls((name,), 0, {(0, s): e for s, e in choice.items()})

    def next_memory(self, m, e):
        return self.update.get((m, e), m)

    def choose(self, m, s, game=None):
        """Edge played at ``s`` in memory ``m``. States with a single
        outgoing edge need no entry."""
        e = self.action.get((m, s))
        if e is not None:
            return e
        if game is not None and len(game.out(s)) == 1:
            return game.out(s)[0]
        name = game.name(s) if game is not None else s
        raise UndefinedAction(self.memory[m], name)

    def reachable(self, g, start=None):
        """(memory, state) pairs reachable against an arbitrary adversary."""
        start = g.initial if start is None else start
        seen = {(self.initial, start)}
        queue = deque(seen)
        while queue:
            m, s = queue.popleft()
            edges = (self.choose(m, s, g),) if g.is_p1(s) else g.out(s)
            for e in edges:
                nxt = (self.next_memory(m, e), g.edges[e].dst)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def restricted(self, g, start=None):
        """Copy keeping only entries used from reachable (memory, state) pairs."""
        pairs = self.reachable(g, start)
        action = {k: v for k, v in self.action.items() if k in pairs}
        update = {}
        for m, s in pairs:
            moves = (self.choose(m, s, g),) if g.is_p1(s) else g.out(s)
            for e in moves:
                if (m, e) in self.update:
                    update[(m, e)] = self.update[(m, e)]
        return FiniteMemoryStrategy(self.memory, self.initial, action, update)


@dataclass(frozen=True)
class MarkovChain:
    """Finite Markov chain with weighted transitions.

    ``rows[i]`` lists ``(successor, probability, weight)``; parallel
    transitions to the same successor are kept apart. ``origin[i]`` is the
    game state that chain state ``i`` projects to.
    """
    labels: tuple
    origin: tuple
    rows: tuple
    initial: int = 0

    @property
    def n(self):
        return len(self.rows)


def apply_strategy(mdp, strategy, start=None):
    """Markov chain over the (memory, state) pairs reachable from the start."""
    g = mdp.game
    start = g.initial if start is None else start
    init = (strategy.initial, start)
    index = {init: 0}
    labels = [init]
    rows = []
    i = 0
    while i < len(labels):
        m, s = labels[i]
        if g.is_p1(s):
            moves = [(strategy.choose(m, s, g), Fraction(1))]
        else:
            moves = list(mdp.rows[s].items())
        row = []
        for e, p in moves:
            edge = g.edges[e]
            nxt = (strategy.next_memory(m, e), edge.dst)
            if nxt not in index:
                index[nxt] = len(labels)
                labels.append(nxt)
            row.append((index[nxt], p, edge.weight))
        rows.append(tuple(row))
        i += 1
    return MarkovChain(tuple(labels), tuple(s for _, s in labels), tuple(rows), 0)


def compose_finite_memory_model(g, fm):
    """Synchronised product of ``g`` with a finite-memory adversary model.

    Returns a game over reachable (state, memory) pairs named ``state@memory``
    and a memoryless model for it.
    """
    init = (g.initial, fm.initial)
    index = {init: 0}
    pairs = [init]
    edges = []
    rows = {}
    i = 0
    while i < len(pairs):
        s, m = pairs[i]
        m2 = fm.next_memory(m, s)
        local = {}
        for e in g.out(s):
            edge = g.edges[e]
            nxt = (edge.dst, m2)
            if nxt not in index:
                index[nxt] = len(pairs)
                pairs.append(nxt)
            local[e] = len(edges)
            edges.append(Edge(i, index[nxt], edge.weight, edge.label))
        if not g.is_p1(s):
            row = fm.rows.get((m, s))
            if row is None:
                if len(g.out(s)) != 1:
                    raise MissingRow(f"{g.name(s)}@{fm.memory[m]}")
                row = {g.out(s)[0]: Fraction(1)}
            _check_row(g, s, row, where=f"{g.name(s)}@{fm.memory[m]}")
            rows[i] = {local[e]: Fraction(p) for e, p in row.items()}
        i += 1
    states = tuple(State(f"{g.name(s)}@{fm.memory[m]}", g.owner(s)) for s, m in pairs)
    targets = frozenset(i for i, (s, _) in enumerate(pairs) if s in g.targets)
    product = GameGraph(states, tuple(edges), 0, targets)
    return product, StochasticModel(rows)


def subgame(g, states, edges):
    """Game induced by ``states`` and ``edges`` (a subset of edge indices).

    Returns ``(subgame, state_map, edge_map)`` where the maps send new indices
    to indices of ``g``.
    """
    state_map = sorted(states)
    new_index = {s: i for i, s in enumerate(state_map)}
    edge_map = sorted(e for e in edges
                      if g.edges[e].src in new_index and g.edges[e].dst in new_index)
    new_edges = tuple(Edge(new_index[g.edges[e].src], new_index[g.edges[e].dst],
                           g.edges[e].weight, g.edges[e].label) for e in edge_map)
    initial = new_index.get(g.initial, 0)
    sub = GameGraph(tuple(g.states[s] for s in state_map), new_edges, initial,
                    frozenset(new_index[t] for t in g.targets if t in new_index))
    return sub, state_map, edge_map


@dataclass(frozen=True)
class SynthesisQuery:
    measure: Measure
    mu: int
    nu: Fraction
    epsilon: Optional[Fraction] = None
    targets: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "nu", Fraction(self.nu))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.measure is Measure.SHORTEST_PATH:
            if not self.targets:
                raise InvalidQuery("shortest-path queries need a nonempty target set")
            if self.mu < 1:
                raise InvalidQuery("shortest-path worst-case threshold must be >= 1")
        elif self.epsilon is not None and self.epsilon <= 0:
            raise InvalidQuery("epsilon must be positive")


@dataclass
class SynthesisResult:
    """Outcome of a beyond-worst-case query.

    ``worst_case`` and ``expectation`` are the exact values certified for
    ``strategy`` (``None`` when the answer is negative).
    """
    decision: bool
    reason: str
    strategy: Optional[FiniteMemoryStrategy] = None
    worst_case: object = None
    expectation: Optional[Fraction] = None
    details: dict = field(default_factory=dict)

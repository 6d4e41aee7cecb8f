"""Line-based text formats for games, adversary models and strategies.

One declaration per line; ``#`` starts a comment. Games::

    game shortest-path
    state s1 p1
    state s2 p2
    state s3 p1
    edge s1 s2 1
    edge s2 s3 1
    edge s2 s1 1
    edge s1 s3 5
    edge s3 s3 1
    init s1
    target s3

Models (``<edge>`` is an edge label or, failing that, the target state;
``dst[k]`` selects the k-th of several unlabelled parallel edges)::

    model memoryless
    row s2: s3 1/2, s1 1/2

    model mealy 2
    mem m0 init
    mem m1
    update m0 s2 -> m1
    row m0 s2: s3 1/2, s1 1/2

Strategies (missing ``update`` lines keep the memory unchanged)::

    strategy 1
    mem m0 init
    act m0 s1 -> s2
"""

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    BwcError, DuplicateState, MissingRow, ModelError, ParseError, ProbabilityNotOne,
    UnknownEdge, UnknownState,
)
from .model import (
    Edge, FiniteMemoryModel, FiniteMemoryStrategy, GameGraph, Measure, Owner,
    State, StochasticModel, validate_game,
)

_PROB = re.compile(r"^(\d+)/(\d+)$")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    start: int = 1
    end: int = 1

    def __str__(self):
        return f"line {self.line}, columns {self.start}-{self.end}"


@dataclass
class _Tok:
    text: str
    span: SourceSpan


def _lines(text):
    """Yield ``(line number, [tokens])`` for non-blank lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [_Tok(m.group(), SourceSpan(no, m.start() + 1, m.end()))
                for m in re.finditer(r"[^\s,:]+|[,:]", line)]
        if toks:
            yield no, toks


def _whole(toks):
    return SourceSpan(toks[0].span.line, toks[0].span.start, toks[-1].span.end)


def _expect(toks, n_min, n_max, usage):
    if not n_min <= len(toks) <= n_max:
        raise ParseError(f"expected `{usage}`", _whole(toks))


def _with_span(err, span):
    if getattr(err, "span", None) is None:
        err.span = span
        err.args = (f"{span}: {err.args[0]}",) + err.args[1:] if err.args else err.args
    return err


# -- games -------------------------------------------------------------------

def parse_game(text):
    """Parse a game file. Returns ``(GameGraph, Measure)``."""
    measure = None
    states, state_span = [], {}
    raw_edges = []
    init = None
    targets = []
    for no, toks in _lines(text):
        kw = toks[0].text
        if measure is None and kw != "game":
            raise ParseError("file must start with `game <measure>`", toks[0].span)
        if kw == "game":
            _expect(toks, 2, 2, "game <mean-payoff|shortest-path>")
            if measure is not None:
                raise ParseError("duplicate `game` line", toks[0].span)
            try:
                measure = Measure(toks[1].text)
            except ValueError:
                raise ParseError(f"unknown measure {toks[1].text!r}", toks[1].span) from None
        elif kw == "state":
            _expect(toks, 3, 3, "state <name> <p1|p2>")
            name = toks[1].text
            if name in state_span:
                raise DuplicateState(f"state {name!r} declared twice", toks[1].span)
            try:
                owner = Owner(toks[2].text)
            except ValueError:
                raise ParseError(f"owner must be p1 or p2, got {toks[2].text!r}",
                                 toks[2].span) from None
            state_span[name] = toks[1].span
            states.append(State(name, owner))
        elif kw == "edge":
            if len(toks) not in (4, 6) or (len(toks) == 6 and toks[4].text != "label"):
                raise ParseError("expected `edge <src> <dst> <weight> [label <word>]`",
                                 _whole(toks))
            try:
                w = int(toks[3].text)
            except ValueError:
                raise ParseError(f"weight must be an integer, got {toks[3].text!r}",
                                 toks[3].span) from None
            label = toks[5].text if len(toks) == 6 else None
            raw_edges.append((toks[1], toks[2], w, label, _whole(toks)))
        elif kw == "init":
            _expect(toks, 2, 2, "init <name>")
            if init is not None:
                raise ParseError("duplicate `init` line", toks[0].span)
            init = toks[1]
        elif kw == "target":
            _expect(toks, 2, 2, "target <name>")
            targets.append(toks[1])
        else:
            raise ParseError(f"unknown declaration {kw!r}", toks[0].span)
    if measure is None:
        raise ParseError("empty game file", SourceSpan(1))
    index = {s.name: i for i, s in enumerate(states)}

    def resolve(tok):
        if tok.text not in index:
            raise UnknownState(f"unknown state {tok.text!r}", tok.span)
        return index[tok.text]

    edges, edge_span = [], []
    for src, dst, w, label, span in raw_edges:
        edges.append(Edge(resolve(src), resolve(dst), w, label))
        edge_span.append(span)
    if init is None:
        raise ParseError("missing `init` line", SourceSpan(1))
    if targets and measure is not Measure.SHORTEST_PATH:
        raise ParseError("`target` is only allowed in shortest-path games", targets[0].span)
    if measure is Measure.SHORTEST_PATH and not targets:
        raise ParseError("shortest-path games need at least one `target`", SourceSpan(1))
    g = GameGraph(tuple(states), tuple(edges), resolve(init),
                  frozenset(resolve(t) for t in targets))
    try:
        validate_game(g, measure)
    except ModelError as err:
        span = None
        if hasattr(err, "state"):
            span = state_span.get(err.state)
        elif isinstance(getattr(err, "edge", None), str):
            for i, e in enumerate(g.edges):
                if e.describe(g) == err.edge:
                    span = edge_span[i]
                    break
        raise _with_span(err, span or SourceSpan(1))
    return g, measure


def serialize_game(g, measure):
    measure = Measure(measure)
    lines = [f"game {measure.value}"]
    lines += [f"state {s.name} {s.owner.value}" for s in g.states]
    for e in g.edges:
        tail = f" label {e.label}" if e.label is not None else ""
        lines.append(f"edge {g.name(e.src)} {g.name(e.dst)} {e.weight}{tail}")
    lines.append(f"init {g.name(g.initial)}")
    lines += [f"target {g.name(t)}" for t in sorted(g.targets)]
    return "\n".join(lines) + "\n"


# -- models ------------------------------------------------------------------

def _state(g, tok):
    try:
        return g.index(tok.text)
    except KeyError:
        raise UnknownState(f"unknown state {tok.text!r}", tok.span) from None


def _edge(g, s, tok):
    try:
        return g.find_edge(s, tok.text)
    except UnknownEdge as err:
        raise _with_span(err, tok.span) from None


def _parse_row(g, s, toks, where):
    """``toks`` are the tokens after the colon: ``<edge> <num>/<den> , ...``."""
    row = {}
    groups, cur = [], []
    for t in toks:
        if t.text == ",":
            groups.append(cur)
            cur = []
        else:
            cur.append(t)
    groups.append(cur)
    for grp in groups:
        if len(grp) != 2:
            span = _whole(grp) if grp else toks[-1].span if toks else None
            raise ParseError("row entries must look like `<edge> <num>/<den>`", span)
        e = _edge(g, s, grp[0])
        m = _PROB.match(grp[1].text)
        if m is None or int(m.group(2)) == 0:
            raise ParseError(f"probability must be a fraction num/den, got {grp[1].text!r}",
                             grp[1].span)
        if e in row:
            raise ParseError(f"edge {grp[0].text!r} listed twice", grp[0].span)
        row[e] = Fraction(int(m.group(1)), int(m.group(2)))
    total = sum(row.values(), Fraction(0))
    if total != 1:
        raise _with_span(ProbabilityNotOne(where, total), _whole(toks))
    return row


def _split_colon(toks, usage):
    for i, t in enumerate(toks):
        if t.text == ":":
            return toks[:i], toks[i + 1:]
    raise ParseError(f"expected `{usage}`", _whole(toks))


def parse_model(text, g):
    """Parse a model for game ``g``: a StochasticModel or a FiniteMemoryModel."""
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty model file", SourceSpan(1))
    head = lines[0][1]
    if head[0].text != "model" or len(head) < 2 or head[1].text not in ("memoryless", "mealy"):
        raise ParseError("file must start with `model memoryless` or `model mealy <k>`",
                         _whole(head))
    if head[1].text == "memoryless":
        _expect(head, 2, 2, "model memoryless")
        rows, spans = {}, {}
        for _, toks in lines[1:]:
            if toks[0].text != "row":
                raise ParseError(f"unexpected {toks[0].text!r} in memoryless model", toks[0].span)
            left, right = _split_colon(toks, "row <state>: <edge> <num>/<den>, ...")
            _expect(left, 2, 2, "row <state>: ...")
            s = _state(g, left[1])
            if g.is_p1(s):
                raise ParseError(f"{left[1].text!r} is a player-1 state", left[1].span)
            if s in rows:
                raise ParseError(f"second row for {left[1].text!r}", left[1].span)
            rows[s] = _parse_row(g, s, right, left[1].text)
            spans[s] = left[1].span
        for s in g.p2_states:
            if s not in rows and len(g.out(s)) != 1:
                raise _with_span(MissingRow(g.name(s)), SourceSpan(lines[-1][0]))
        return StochasticModel(rows)
    _expect(head, 3, 3, "model mealy <k>")
    k = _int(head[2])
    memory, initial, mem_index = [], None, {}
    update, rows = {}, {}
    for _, toks in lines[1:]:
        kw = toks[0].text
        if kw == "mem":
            initial = _mem_decl(toks, memory, mem_index, initial)
        elif kw == "update":
            _expect(toks, 5, 5, "update <mem> <state> -> <mem>")
            if toks[3].text != "->":
                raise ParseError("expected `->`", toks[3].span)
            update[(_mem(mem_index, toks[1]), _state(g, toks[2]))] = _mem(mem_index, toks[4])
        elif kw == "row":
            left, right = _split_colon(toks, "row <mem> <state>: ...")
            _expect(left, 3, 3, "row <mem> <state>: ...")
            mm = _mem(mem_index, left[1])
            s = _state(g, left[2])
            if g.is_p1(s):
                raise ParseError(f"{left[2].text!r} is a player-1 state", left[2].span)
            if (mm, s) in rows:
                raise ParseError("duplicate row", _whole(left))
            rows[(mm, s)] = _parse_row(g, s, right, f"{left[2].text}@{left[1].text}")
        else:
            raise ParseError(f"unexpected {kw!r} in mealy model", toks[0].span)
    _check_memory(memory, initial, k, head)
    last = SourceSpan(lines[-1][0])
    for mm in range(len(memory)):
        for s in g.p2_states:
            if (mm, s) not in rows and len(g.out(s)) != 1:
                raise _with_span(MissingRow(f"{g.name(s)}@{memory[mm]}"), last)
    return FiniteMemoryModel(tuple(memory), initial, update, rows)


def _int(tok):
    try:
        v = int(tok.text)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok.text!r}", tok.span) from None
    if v < 1:
        raise ParseError("memory size must be >= 1", tok.span)
    return v


def _mem_decl(toks, memory, mem_index, initial):
    _expect(toks, 2, 3, "mem <id> [init]")
    name = toks[1].text
    if name in mem_index:
        raise ParseError(f"memory {name!r} declared twice", toks[1].span)
    if len(toks) == 3:
        if toks[2].text != "init":
            raise ParseError("expected `init`", toks[2].span)
        if initial is not None:
            raise ParseError("two initial memory elements", toks[2].span)
        initial = len(memory)
    mem_index[name] = len(memory)
    memory.append(name)
    return initial


def _mem(mem_index, tok):
    try:
        return mem_index[tok.text]
    except KeyError:
        raise ParseError(f"unknown memory {tok.text!r}", tok.span) from None


def _check_memory(memory, initial, k, head):
    if len(memory) != k:
        raise ParseError(f"header announces {k} memory elements, found {len(memory)}",
                         _whole(head))
    if initial is None:
        raise ParseError("no memory element is marked `init`", _whole(head))


def serialize_model(m, g):
    def row(r):
        return ", ".join(f"{g.edge_token(e)} {p.numerator}/{p.denominator}"
                         for e, p in sorted(r.items()))
    if isinstance(m, StochasticModel):
        lines = ["model memoryless"]
        lines += [f"row {g.name(s)}: {row(r)}" for s, r in sorted(m.rows.items())]
        return "\n".join(lines) + "\n"
    lines = [f"model mealy {len(m.memory)}"]
    lines += [f"mem {name}" + (" init" if i == m.initial else "")
              for i, name in enumerate(m.memory)]
    lines += [f"update {m.memory[a]} {g.name(s)} -> {m.memory[b]}"
              for (a, s), b in sorted(m.update.items())]
    lines += [f"row {m.memory[a]} {g.name(s)}: {row(r)}"
              for (a, s), r in sorted(m.rows.items())]
    return "\n".join(lines) + "\n"


# -- strategies --------------------------------------------------------------

def parse_strategy(text, g):
    """Parse a strategy for ``g`` and check it is defined wherever it can go."""
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty strategy file", SourceSpan(1))
    head = lines[0][1]
    if head[0].text != "strategy":
        raise ParseError("file must start with `strategy <k>`", head[0].span)
    _expect(head, 2, 2, "strategy <k>")
    k = _int(head[1])
    memory, initial, mem_index = [], None, {}
    action, update = {}, {}
    for _, toks in lines[1:]:
        kw = toks[0].text
        if kw == "mem":
            initial = _mem_decl(toks, memory, mem_index, initial)
        elif kw == "act":
            _expect(toks, 5, 5, "act <mem> <p1-state> -> <edge>")
            if toks[3].text != "->":
                raise ParseError("expected `->`", toks[3].span)
            mm = _mem(mem_index, toks[1])
            s = _state(g, toks[2])
            if not g.is_p1(s):
                raise ParseError(f"{toks[2].text!r} is not a player-1 state", toks[2].span)
            try:
                action[(mm, s)] = g.find_edge(s, toks[4].text)
            except UnknownEdge as err:
                raise ParseError(str(err), toks[4].span) from None
        elif kw == "update":
            _expect(toks, 6, 6, "update <mem> <state> <edge> -> <mem>")
            if toks[4].text != "->":
                raise ParseError("expected `->`", toks[4].span)
            mm = _mem(mem_index, toks[1])
            s = _state(g, toks[2])
            try:
                e = g.find_edge(s, toks[3].text)
            except UnknownEdge as err:
                raise ParseError(str(err), toks[3].span) from None
            update[(mm, e)] = _mem(mem_index, toks[5])
        else:
            raise ParseError(f"unexpected {kw!r} in strategy", toks[0].span)
    _check_memory(memory, initial, k, head)
    strategy = FiniteMemoryStrategy(tuple(memory), initial, action, update)
    strategy.reachable(g)
    return strategy


def serialize_strategy(strategy, g):
    lines = [f"strategy {strategy.size}"]
    lines += [f"mem {name}" + (" init" if i == strategy.initial else "")
              for i, name in enumerate(strategy.memory)]
    for (m, s), e in sorted(strategy.action.items()):
        lines.append(f"act {strategy.memory[m]} {g.name(s)} -> {g.edge_token(e)}")
    for (m, e), m2 in sorted(strategy.update.items()):
        edge = g.edges[e]
        lines.append(f"update {strategy.memory[m]} {g.name(edge.src)} "
                     f"{g.edge_token(e)} -> {strategy.memory[m2]}")
    return "\n".join(lines) + "\n"


def read_game(path):
    with open(path, encoding="utf-8") as fh:
        return parse_game(fh.read())


def read_model(path, g):
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), g)


def read_strategy(path, g):
    with open(path, encoding="utf-8") as fh:
        return parse_strategy(fh.read(), g)


__all__ = [
    "SourceSpan", "parse_game", "serialize_game", "parse_model", "serialize_model",
    "parse_strategy", "serialize_strategy", "read_game", "read_model", "read_strategy",
    "BwcError",
]

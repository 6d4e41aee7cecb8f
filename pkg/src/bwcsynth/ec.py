"""Winning and losing end components for the mean-payoff worst case.

Inside an end component the stochastic states are handed back to the
adversary, restricted to the edges the model can actually take there. The
component is winning when player 1 can stay inside and keep the mean-payoff
strictly above the threshold from every state.
"""

import enum
from dataclasses import dataclass, field

from .expectation import EcRecord, ec_gain, mec_decomposition
from .model import apply_model, subgame
from .worstcase import solve_mp_game


class Verdict(enum.Enum):
    WINNING = "winning"
    LOSING = "losing"


@dataclass
class EcClassification:
    ec: EcRecord
    verdict: Verdict
    witness: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    @property
    def winning(self):
        return self.verdict is Verdict.WINNING


def ec_edges(g, states, support_edges):
    """Edges of the game induced by an end component: every internal edge of a
    player-1 state, and the internal support edges of stochastic states."""
    inside = set(states)
    out = []
    for s in sorted(inside):
        for e in g.out(s):
            if g.edges[e].dst not in inside:
                continue
            if g.is_p1(s) or e in support_edges:
                out.append(e)
    return out


def _local_game(g, states, support_edges):
    edges = ec_edges(g, states, support_edges)
    has_move = {g.edges[e].src for e in edges}
    if any(s not in has_move for s in states):
        return None
    return subgame(g, states, edges)


def classify_ec(g, ec, mu):
    """Decide whether player 1 can stay in ``ec`` with mean-payoff > ``mu``.

    ``ec.edges`` tells which player-2 edges have positive probability.
    """
    local = _local_game(g, ec.states, ec.edges)
    if local is None:
        return EcClassification(ec, Verdict.LOSING)
    sub, smap, emap = local
    table = solve_mp_game(sub)
    values = {smap[i]: v for i, v in enumerate(table.values)}
    if all(v > mu for v in values.values()):
        witness = {smap[s]: emap[e] for s, e in table.p1.items()}
        return EcClassification(ec, Verdict.WINNING, witness, values)
    return EcClassification(ec, Verdict.LOSING, values=values)


def maximal_wecs(g, m, mu, table=None):
    """Inclusion-maximal winning end components, pairwise disjoint.

    Only states of the global worst-case winning region are considered: from
    there an adversary leaving a component through a zero-probability edge
    can still be answered by the global worst-case strategy. Each maximal
    end component is classified; a losing one is shrunk to the states from
    which player 1 can stay and win, whose own maximal end components are
    then examined in turn.
    """
    mdp = apply_model(g, m)
    table = solve_mp_game(g) if table is None else table
    region = {s for s in range(g.n) if table.values[s] > mu}
    out = []
    work = [region]
    while work:
        states = work.pop()
        for mec in mec_decomposition(mdp, states, with_values=False):
            verdict = classify_ec(g, mec, mu)
            if verdict.winning:
                value, strat = ec_gain(mdp, mec.states, mec.edges)
                out.append(EcRecord(mec.states, mec.edges, value, strat))
                continue
            keep = {s for s, v in verdict.values.items() if v > mu}
            if keep:
                work.append(keep)
    out.sort(key=lambda r: min(r.states))
    return out


__all__ = ["Verdict", "EcClassification", "classify_ec", "maximal_wecs", "ec_edges"]

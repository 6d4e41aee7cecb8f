"""Exact rational linear solves on sparse systems.

Systems coming from Markov chains are sparse and often close to acyclic, so
they are split into strongly connected blocks and each block is eliminated
with a fill-aware pivot choice.
"""

from collections import defaultdict
from fractions import Fraction

from .graph import sccs

_ZERO = Fraction(0)


class SingularSystem(ArithmeticError):
    pass


def solve_sparse(equations):
    """Solve ``sum(coeffs[v] * x[v]) == rhs`` for every ``(coeffs, rhs)``.

    ``coeffs`` maps variables to Fractions. Returns ``{variable: value}``.
    """
    rows = [{v: Fraction(a) for v, a in c.items() if a} for c, _ in equations]
    rhs = [Fraction(b) for _, b in equations]
    col = defaultdict(set)
    for r, row in enumerate(rows):
        for v in row:
            col[v].add(r)
    active = set(range(len(rows)))
    order = []
    while active:
        r = min(active, key=lambda i: (len(rows[i]), i))
        row = rows[r]
        active.discard(r)
        if not row:
            if rhs[r] != 0:
                raise SingularSystem("inconsistent system")
            continue
        v = min(row, key=lambda u: (len(col[u]), str(u)))
        piv = row[v]
        for r2 in list(col[v]):
            if r2 not in active:
                continue
            other = rows[r2]
            f = other[v] / piv
            for u, a in row.items():
                new = other.get(u, _ZERO) - f * a
                if new:
                    other[u] = new
                    col[u].add(r2)
                else:
                    other.pop(u, None)
                    col[u].discard(r2)
            rhs[r2] -= f * rhs[r]
        order.append((r, v))
    x = {}
    for r, v in reversed(order):
        acc = rhs[r]
        for u, a in rows[r].items():
            if u != v:
                acc -= a * x[u]
        x[v] = acc / rows[r][v]
    if len(x) != len(col):
        raise SingularSystem("underdetermined system")
    return x


def solve_fixed_point(system, known=None):
    """Solve ``x[v] = const + sum(p * x[u])`` for the variables of ``system``.

    ``system`` maps each variable to ``(const, {u: p})``; variables that are
    referenced but not defined must appear in ``known``.
    """
    known = dict(known or {})
    keys = list(system)
    pos = {v: i for i, v in enumerate(keys)}
    succ = [[pos[u] for u in system[v][1] if u in pos] for v in keys]
    for comp in sccs(len(keys), succ):
        block = [keys[i] for i in comp]
        members = set(block)
        eqs = []
        for v in block:
            const, coeffs = system[v]
            c = {v: Fraction(1)}
            b = Fraction(const)
            for u, p in coeffs.items():
                if u in members:
                    c[u] = c.get(u, _ZERO) - p
                else:
                    b += p * known[u]
            eqs.append((c, b))
        if len(block) == 1 and block[0] not in system[block[0]][1]:
            known[block[0]] = eqs[0][1]
            continue
        known.update(solve_sparse(eqs))
    return {v: known[v] for v in keys}

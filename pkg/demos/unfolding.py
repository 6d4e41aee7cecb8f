"""
Unfolding a shortest-path game
==============================

A two-state loop: from s1 we can pay 5 to finish at once, or pay 1 to reach
s2, where a coin either finishes (cost 1) or sends us back to s1 (cost 1).
With a budget of 8 the coin may be tried once but not twice.
"""

from bwcsynth.bwc_sp import safe_region, synthesize_bwc_sp, unfold
from bwcsynth.instances import load
from bwcsynth.textformat import serialize_strategy

g, _, m, _ = load("simple.g", "simple.m")

u = unfold(g, 8)
safe = safe_region(u)
for i in range(u.game.n):
    tag = "target" if i in u.doubles else "over" if i in u.tops else ""
    print(f"{u.game.name(i):6} {'safe' if i in safe.region else '    '} {tag}")

for nu in (5, 4.5):
    res = synthesize_bwc_sp(g, m, g.targets, 8, nu)
    print(f"nu={nu}: decision {res.decision}, optimum {res.details['optimal_expectation']}")
    if res.decision:
        print(f"  worst case {res.worst_case}, expectation {res.expectation}")
        print(serialize_strategy(res.strategy, g))

"""
Mean payoff beyond the worst case
=================================

At a we may collect 1 forever, or move to b where a fair coin pays 6 or 0
before returning. The worst case of the gamble is 0 per step but its average
is 3/2. A combined strategy gambles most of the time and falls back to the
safe loop whenever the recent sum looks bad.
"""

from fractions import Fraction

from bwcsynth.bwc_mp import bwc_mp_decide, calibrate_KL, synthesize_bwc_mp, wec_game
from bwcsynth.ec import maximal_wecs
from bwcsynth.instances import load

g, _, m, _ = load("wec.g", "wec.m")

for nu in (1, Fraction(3, 2)):
    d = bwc_mp_decide(g, m, 0, nu)
    print(f"nu={nu}: decision {d.decision} (supremum {d.e_dagger})")

[ec] = maximal_wecs(g, m, 0)
w = wec_game(g, m, ec, 0)
for k in (1, 2, 3):
    eps = Fraction(1, 2 ** k)
    c = calibrate_KL(w, eps)
    print(f"eps={eps}: K={c.params.K} L={c.params.L} memory {c.strategy.size}"
          f" worst {c.worst_case} expectation {c.expectation} = {float(c.expectation):.4f}")

res = synthesize_bwc_mp(g, m, 0, 1, epsilon=Fraction(1, 8))
print("synthesized:", res.worst_case, res.expectation, "memory", res.strategy.size)

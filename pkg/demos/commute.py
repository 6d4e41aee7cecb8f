"""
Commuting to work under a deadline
==================================

Three ways to get to work: bicycle (45 minutes, always), car (fast on
average but 71 minutes in heavy traffic) and train (cheap on average but
can be delayed at the station). We want to be at work in under an hour no
matter what, and as early as possible on average.
"""

from fractions import Fraction

from bwcsynth import synthesize_bwc_sp
from bwcsynth.evaluation import exact_expectation, simulate, verify_worst_case_sp
from bwcsynth.expectation import expected_ssp_optimal
from bwcsynth.instances import load
from bwcsynth.model import Measure, apply_model
from bwcsynth.textformat import serialize_strategy
from bwcsynth.worstcase import solve_sp_worst_case

g, _, m, _ = load("commute.g", "commute.m")
home = g.index("home")

# the two classical answers
safe = solve_sp_worst_case(g)
print("worst-case optimum:", safe.values[home], "via", g.edge_token(safe.p1[home]))
avg = expected_ssp_optimal(apply_model(g, m), g.targets)
print("expected optimum:  ", avg.values[home], "via", g.edge_token(avg.strategy[home]))

# the car is only good on average
car = load("commute.g", None, "car.s")[3]
print("car worst case:", verify_worst_case_sp(g, car, g.targets, 60).worst_case)

# a hand-written train strategy: give up after the third delay
s = load("commute.g", None, "three_delays.s")[3]
cert = verify_worst_case_sp(g, s, g.targets, 60)
exp = exact_expectation(g, m, s, Measure.SHORTEST_PATH)
print(f"3 delays: worst case {cert.worst_case}, expectation {exp} = {float(exp)}")

# let the synthesizer look for something better under the same deadline
res = synthesize_bwc_sp(g, m, g.targets, mu=60, nu=45)
print(f"synthesized: worst case {res.worst_case}, expectation {res.expectation}"
      f" = {float(res.expectation):.4f}, memory {res.strategy.size}")
print(serialize_strategy(res.strategy, g))

# sampling agrees with the exact value and never breaks the deadline
summ = simulate(g, m, res.strategy, 100_000, 10_000, seed=42)
print(f"simulated mean {summ.mean:.4f} +- {3 * summ.stderr:.4f}, max {summ.max:g}")
assert abs(summ.mean - float(res.expectation)) < 3 * summ.stderr
assert summ.max <= res.worst_case < 60
assert res.expectation <= Fraction(37562, 1000)

"""Grouping players with a common support.

At equilibrium, larger players use a superset of the links smaller players
use, so players split into at most m consecutive blocks.  The edges-exponential
solver tries each partition (fewest blocks first), solves the game with
block-averaged demands, and keeps the first one whose edge totals can be split
back into per-player equilibrium flows.
"""
from fractions import Fraction

import numpy as np

from asrg import CostFunction, Instance, TypeSet, build_averaged, enumerate_typesets, solve_edges_exp
from asrg.typeset import candidate_order

print("placements of 4 players into 3 bins:", len(enumerate_typesets(4, 3)))
print("distinct partitions, in solver order:", [str(ts) for ts in candidate_order(4, 3)])

cheap, dear = CostFunction.polynomial(0, 1), CostFunction.polynomial(2, 1)
game = Instance((cheap, dear), (3, Fraction(5, 2), Fraction(1, 5)))
print("\naveraged over {1,2},{3}:", [str(d) for d in build_averaged(game, TypeSet((2, 1))).demands])

res = solve_edges_exp(game, 1e-6)
for a in res.extra["attempts"]:
    print(f"  {str(a.typeset):>8}: {'accepted' if a.accepted else 'rejected'} ({a.reason[:60]})")
print("flows:\n", np.array2string(res.flow.flow, precision=6))

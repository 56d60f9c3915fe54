"""Two players share two identical links with cost l(x) = x.

Player 1 ships 2 units, player 2 ships 1.  By symmetry each splits evenly, so
the flows are (1, 1) and (1/2, 1/2); the marginal costs are
l(1.5) + own * l'(1.5) = 2.5 and 2.0.  Both solvers should land there, and the
independent checker and best-response oracle should agree it is an equilibrium.
"""
import numpy as np

from asrg import CostFunction, Instance, best_response, check, solve_edges_exp, solve_players_exp

x = CostFunction.polynomial(0, 1)
game = Instance((x, x), (2, 1))

for solve in (solve_players_exp, solve_edges_exp):
    res = solve(game, 1e-6)
    print(f"{res.algorithm}: {res.probes} probes, {res.wall_time * 1000:.1f} ms")
    print(np.array2string(res.flow.flow, precision=8))
    print("marginals", np.round(res.marginals, 8))

report = check(game, res.flow, 1e-6)
print()
print(report.summary())

# nudging player 1 off the equilibrium lets a best response win back the difference
nudged = res.flow.flow.copy()
nudged[0] = [0.9, 1.1]
repaired, gain = best_response(game, nudged, 0)
print(f"\nafter nudging player 1: best response changes its cost by {gain:.4f}")
print("repaired row", np.round(repaired.flow[0], 8))

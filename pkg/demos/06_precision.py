"""Standard and high-precision arithmetic.

The solvers run compiled float64 loops by default.  When the requested
accuracy needs demand resolution finer than float64 can certify, they stop
with an error that points to the high-precision mode, which runs the same
loops on 50-digit numbers.
"""
import numpy as np

from asrg import CostFunction, Instance, PrecisionError, solve_players_exp

x = CostFunction.polynomial(0, 1)
game = Instance((x, CostFunction.polynomial(1, 2)), (2, 1))

fast = solve_players_exp(game, 1e-8)
print(f"standard: gap {fast.report.max_gap:.2e}, {fast.wall_time * 1000:.1f} ms")

try:
    solve_players_exp(game, 1e-13)
except PrecisionError as exc:
    print("eps = 1e-13 in float64:", exc)

slow = solve_players_exp(game, 1e-8, precision="high")
print(f"high: gap {slow.report.max_gap:.2e}, {slow.wall_time:.1f} s")
print("largest difference between the two flows:", float(np.max(np.abs(slow.flow.flow - fast.flow.flow))))

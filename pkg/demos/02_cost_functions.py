"""Piecewise-polynomial costs: validation, evaluation and the smoothness bound.

The first function is a three-piece latency (affine, quadratic, affine) whose
pieces are glued with matching value and slope; the validator confirms the
gluing with exact rational arithmetic.  A function with a kink is rejected,
and the smoothness bound collects the largest value, slope, curvature and
inverse slope over the range the solvers evaluate.
"""
from fractions import Fraction

from asrg import CostFunction, compute_psi, validate
from asrg.verify import marginal

glued = CostFunction([
    (0, [Fraction("293.1103"), Fraction("0.1694")]),
    (599, [Fraction(118472907676, 1190000), Fraction(-394202776, 1190000), Fraction(329219, 1190000)]),
    (Fraction(599) + Fraction(119, 173), [65, Fraction("0.55")]),
])
print("glued latency valid on [0, 2000]:", validate(glued, 2000).ok)
for b in glued.breakpoints[1:]:
    print(f"  at x = {float(b):.4f}: value {float(glued.eval(b)):.6f}, slope {float(glued.eval_d1(b)):.6f}")

kinked = CostFunction([(0, [0, 1]), (1, [-1, 2])])
print("\nkinked function:", validate(kinked, 10))

flat = CostFunction.polynomial(208, Fraction(6, 100))
print("\nmarginal cost of one player carrying all 100 units of 0.06x + 208:", marginal(flat, 100, 100))

square_plus = CostFunction.polynomial(0, 1, 1)
print("smoothness bound for x^2 + x on [0, 2]:", compute_psi([square_plus], 2).psi)
try:
    compute_psi([CostFunction.polynomial(1, 0, 1)], 2)
except ValueError as exc:
    print("x^2 + 1 is rejected:", exc)

print("\nserialized:", glued.to_dict()["pieces"][1])

"""
Choosing steps and sample sizes for a budget
============================================

With weak order alpha for the fine scheme and strong order gamma for the
coarse one, the error bound is balanced by h = C^-x, h' = C^-y.  When the
coarse scheme's strong error has a small constant eps, the best exponents
depend on the budget, and small budgets prefer a single coarse step.
"""

import math

import numpy as np

from parabolic_cv.budget import RatePair, eps_exponents, grid_minimize, log_theoretical_error, optimize_cv

for a in (1, 2):
    r = RatePair(alpha=a)
    x, y = r.cv_exponents
    print(f"alpha={a}: x={x:.4f} y={y:.4f} error exponent {r.cv_error_exponent:.4f}"
          f" (standard MC {r.standard_error_exponent:.4f})")

plan = optimize_cv(math.exp(14), RatePair())
print("plan at log C = 14:", plan.as_dict())

r = RatePair(epsilon=math.exp(-4))
print("\n log C    x*      y*     grid x  grid y   rate")
for L in (10, 16, 20, 30, 50, 100):
    x, y, small = eps_exponents(L, r)
    gx, gy = grid_minimize(L, r)
    rate = -float(log_theoretical_error(x, max(x, y), L, r)) / L
    print(f"{L:5d}  {x:.4f}  {y:.4f}   {gx:.3f}   {gy:.3f}  {rate:.3f}{'  small budget' if small else ''}")
print("rate tends to", round(6 / 7, 4), "as the budget grows")

"""
Free knots for a convex function in 1D
======================================

Where should the knots of a piecewise linear approximation go, and how much
does fitting the values (instead of interpolating) buy on top of that?
"""

# %%
import numpy as np

from pdeinpaint import spatial1d
from pdeinpaint.pipeline import reproduce_table1

f = spatial1d.exp2x3px()
print(f"function {f.name} on [{f.a}, {f.b}]")

# %%
# Uniform knots waste resolution where the function is almost straight.
for n in (5, 9):
    uniform = spatial1d.uniform_knots(f, n)
    best = spatial1d.optimize_knots_interpolation(f, n)
    print(f"{n} knots  uniform {spatial1d.l1_interp_error(f, uniform):8.4f}"
          f"  optimised {best.errors[-1]:8.4f}  ({best.iterations} iterations)")
    print("   knots", np.round(best.knots, 3))

# %%
# Three ways to spend the same knot budget: interpolate at optimised knots,
# keep those knots but fit the values in L1, or move knots and values together.
for row in reproduce_table1():
    print(f"{row['method']:<14}{row['knots']:>3}  {row['value']:.4f}  (reference {row['reference']})")

# %%
# The interpolation error is not convex in the knot positions. Along the
# segment between two knot sets for exp(x) the sampled curve bends the wrong way.
curve = spatial1d.nonconvexity_witness()
bad = spatial1d.midpoint_violations(curve)
print(f"{bad.size} of {curve.size - 2} interior samples lie above their neighbours' chord")
print("first few at t =", np.round(bad[:5] / (curve.size - 1), 2))

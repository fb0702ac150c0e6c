"""
Three inpainting operators on one mask
======================================

Homogeneous diffusion, biharmonic interpolation and edge-enhancing
anisotropic diffusion restore the same sparse data very differently.
"""

# %%
import numpy as np

from pdeinpaint import EedParams, solve_eed_inpainting, solve_linear_inpainting
from pdeinpaint.grid import mse
from pdeinpaint.inpaint import SolverConfig
from pdeinpaint.operators import assemble_biharmonic, assemble_laplacian
from pdeinpaint.spatial2d import AnalyticParams, analytic_mask
from pdeinpaint.synth import disk

f = disk(48, 48)
mask = analytic_mask(f, AnalyticParams(d=0.06))
print(f"{mask.sum()} stored pixels out of {mask.size}")

# %%
# Homogeneous diffusion obeys a max-min principle; biharmonic interpolation
# is smoother but overshoots the data range near the edge.
u_hom = solve_linear_inpainting(mask, f, assemble_laplacian(48, 48))
u_bih = solve_linear_inpainting(mask, f, assemble_biharmonic(48, 48))
for name, u in (("homogeneous", u_hom), ("biharmonic", u_bih)):
    print(f"{name:<12} mse {mse(u, f):8.2f}  range [{u.min():7.1f}, {u.max():6.1f}]")

# %%
# EED smooths along the edge but hardly across it. The lagged fixed point is
# damped a little, which roughly halves the number of linear solves.
cfg = SolverConfig(eed_relaxation=0.7, eed_fixed_point_tol=1e-3, eed_max_fixed_point_iters=80)
res = solve_eed_inpainting(mask, f, EedParams(), cfg)
print(f"{'EED':<12} mse {mse(res.u, f):8.2f}  range [{res.u.min():7.1f}, {res.u.max():6.1f}]"
      f"  ({res.iterations} fixed-point steps)")

# %%
# A row through the disk centre shows the edge profiles.
row = 24
cols = np.arange(0, 48, 4)
print("col      ", " ".join(f"{c:5d}" for c in cols))
for name, u in (("original", f), ("homog.", u_hom), ("biharm.", u_bih), ("EED", res.u)):
    print(f"{name:<9}", " ".join(f"{v:5.0f}" for v in u[row, cols]))

"""Spatial and tonal data optimisation for PDE-based sparse inpainting."""

from .grid import mse, gaussian_smooth
from .inpaint import SolverConfig, SolverError, solve_eed_inpainting, solve_linear_inpainting
from .operators import EedParams, assemble_biharmonic, assemble_eed, assemble_laplacian

__version__ = "0.1.0"

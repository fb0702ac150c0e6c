"""Inpainting solvers.

For a mask ``c`` and operator ``A`` the reconstruction ``u = r(c, g)`` solves
``(C - (I - C) A) u = C g`` with ``C = diag(c)``. Linear operators give a
linear system; EED makes ``A`` depend on ``u`` and is handled by a lagged
fixed-point iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import as_image, as_mask
from .operators import EedParams, assemble, assemble_eed, assemble_laplacian

OPERATOR_KINDS = ("homogeneous", "biharmonic", "eed")

# Grids up to 128x128 use a sparse LU factorisation, larger ones GMRES.
DIRECT_SOLVE_MAX_PIXELS = 128 * 128


class SolverError(RuntimeError):
    """A linear or nonlinear inpainting solve did not meet its contract."""


@dataclass(frozen=True)
class SolverConfig:
    rel_residual_tol: float = 1e-10
    max_linear_iters: int = 2000
    eed_fixed_point_tol: float = 1e-6
    eed_max_fixed_point_iters: int = 100
    # 1 is the plain lagged iteration; smaller values damp its oscillations
    eed_relaxation: float = 1.0

    def __post_init__(self):
        if min(self.rel_residual_tol, self.eed_fixed_point_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.eed_relaxation <= 1:
            raise ValueError("eed_relaxation must lie in (0, 1]")
        if self.max_linear_iters < 1 or self.eed_max_fixed_point_iters < 1:
            raise ValueError("iteration caps must be positive")


DEFAULT_SOLVER = SolverConfig()


def inpainting_matrix(mask, op) -> sp.csc_matrix:
    """``M = C - (I - C) A`` for a boolean mask and an operator ``A``."""
    c = as_mask(mask).ravel().astype(float)
    n = c.size
    if op.shape != (n, n):
        raise ValueError(f"operator shape {op.shape} does not match {n} pixels")
    return (sp.diags(c) - sp.diags(1.0 - c) @ op).tocsc()


class InpaintingSystem:
    """Factorised inpainting matrix for one fixed (mask, operator) pair.

    Provides ``M^{-1} b`` and ``M^{-T} b``; both are checked against the
    relative residual tolerance of ``cfg``. Instances are never mutated
    after construction.
    """

    def __init__(self, mask, op, cfg: SolverConfig = DEFAULT_SOLVER):
        self.mask = as_mask(mask)
        if not self.mask.any():
            raise ValueError("empty mask: the inpainting system is singular")
        self.shape = self.mask.shape
        self.cfg = cfg
        self.matrix = inpainting_matrix(self.mask, op)
        self._c = self.mask.ravel()
        n = self._c.size
        self._lu = None
        self._ilu = None
        if n <= DIRECT_SOLVE_MAX_PIXELS:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SolverError(f"factorisation failed: {exc}") from exc
        else:
            try:
                self._ilu = spla.spilu(self.matrix, drop_tol=1e-5, fill_factor=20)
            except RuntimeError:
                self._ilu = None

    def _check(self, mat, x, b):
        nb = np.linalg.norm(b)
        res = np.linalg.norm(mat @ x - b)
        if not np.all(np.isfinite(x)) or res > self.cfg.rel_residual_tol * nb:
            raise SolverError(
                f"linear solve missed residual tolerance: {res:.3e} > "
                f"{self.cfg.rel_residual_tol:.1e} * {nb:.3e}"
            )

    def _solve(self, b, transpose: bool) -> np.ndarray:
        b = np.asarray(b, dtype=float).ravel()
        if not np.any(b):
            return np.zeros_like(b)
        mat = self.matrix.T.tocsr() if transpose else self.matrix
        if self._lu is not None:
            x = self._lu.solve(b, trans="T" if transpose else "N")
            if np.linalg.norm(mat @ x - b) > self.cfg.rel_residual_tol * np.linalg.norm(b):
                # one step of iterative refinement absorbs LU rounding on stiff systems
                x += self._lu.solve(b - mat @ x, trans="T" if transpose else "N")
        else:
            prec = None
            if self._ilu is not None:
                ilu = self._ilu
                prec = spla.LinearOperator(
                    mat.shape,
                    matvec=lambda v: ilu.solve(v, trans="T" if transpose else "N"),
                )
            x, info = spla.gmres(
                mat, b, rtol=self.cfg.rel_residual_tol, atol=0.0, restart=100,
                maxiter=self.cfg.max_linear_iters, M=prec,
            )
            if info != 0:
                raise SolverError(f"GMRES did not converge (info={info})")
        self._check(mat, x, b)
        return x

    def apply_inverse(self, b) -> np.ndarray:
        return self._solve(b, transpose=False)

    def apply_inverse_transpose(self, b) -> np.ndarray:
        return self._solve(b, transpose=True)

    def reconstruct(self, g) -> np.ndarray:
        """``r(c, g)``; mask pixels are set to ``g`` exactly afterwards."""
        g = np.asarray(g, dtype=float).ravel()
        rhs = np.where(self._c, g, 0.0)
        u = self.apply_inverse(rhs)
        u[self._c] = g[self._c]
        return u.reshape(self.shape)

    def echo(self, i: int) -> np.ndarray:
        """Inpainting echo of mask pixel ``i`` (flat index): column ``i`` of ``M^{-1}``."""
        if not 0 <= i < self._c.size or not self._c[i]:
            raise ValueError(f"pixel {i} is not a mask pixel")
        e = np.zeros(self._c.size)
        e[i] = 1.0
        return self.reconstruct(e)


def solve_linear_inpainting(mask, f, op, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """Reconstruct ``f`` from its values on ``mask`` with a linear operator."""
    f = as_image(f)
    return InpaintingSystem(as_mask(mask, f.shape), op, cfg).reconstruct(f)


def inpainting_echo(mask, i: int, op, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    return InpaintingSystem(mask, op, cfg).echo(i)


class EedResult(NamedTuple):
    u: np.ndarray
    converged: bool
    iterations: int


def solve_eed_inpainting(
    mask,
    f,
    params: EedParams = EedParams(),
    cfg: SolverConfig = DEFAULT_SOLVER,
    u0=None,
) -> EedResult:
    """EED inpainting by lagged linearisation.

    Starts from the homogeneous reconstruction (or ``u0`` when given) and
    repeatedly solves the linear system with the operator frozen at the
    previous iterate, until the max-norm update drops below
    ``cfg.eed_fixed_point_tol`` or the iteration cap is hit. With
    ``cfg.eed_relaxation < 1`` the next iterate is only moved part of the
    way towards the new solve. The solve itself is returned, so mask
    pixels always carry ``f`` exactly.
    """
    f = as_image(f)
    mask = as_mask(mask, f.shape)
    if not mask.any():
        raise ValueError("empty mask: the inpainting system is singular")
    if u0 is None:
        height, width = f.shape
        u = InpaintingSystem(mask, assemble_laplacian(width, height), cfg).reconstruct(f)
    else:
        u = as_image(u0).reshape(f.shape).copy()
        u[mask] = f[mask]
    omega = cfg.eed_relaxation
    for k in range(1, cfg.eed_max_fixed_point_iters + 1):
        lin = InpaintingSystem(mask, assemble_eed(u, params), cfg).reconstruct(f)
        step = float(np.max(np.abs(lin - u)))
        if step < cfg.eed_fixed_point_tol:
            return EedResult(lin, True, k)
        u = lin if omega == 1.0 else u + omega * (lin - u)
    return EedResult(lin, False, cfg.eed_max_fixed_point_iters)


class Reconstructor:
    """Uniform ``r(c, g)`` for the three operator kinds.

    Linear operators are assembled once per grid. For EED an optional
    ``u0`` replaces the homogeneous initialisation (a warm start).
    """

    def __init__(
        self,
        shape,
        kind: str = "homogeneous",
        eed: EedParams | None = None,
        cfg: SolverConfig = DEFAULT_SOLVER,
    ):
        if kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        self.shape = tuple(shape)
        self.kind = kind
        self.eed = eed or EedParams()
        self.cfg = cfg
        self.op = None if kind == "eed" else assemble(kind, self.shape)
        self.solves = 0

    @property
    def linear(self) -> bool:
        return self.kind != "eed"

    def system(self, mask) -> InpaintingSystem:
        if not self.linear:
            raise TypeError("EED inpainting is nonlinear; no fixed system exists")
        return InpaintingSystem(mask, self.op, self.cfg)

    def __call__(self, mask, g, u0=None) -> np.ndarray:
        self.solves += 1
        if self.linear:
            return self.system(mask).reconstruct(g)
        return solve_eed_inpainting(mask, g, self.eed, self.cfg, u0=u0).u

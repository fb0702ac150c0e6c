"""Sparse finite-difference operators with homogeneous Neumann boundaries.

All operators act on row-major flattened images and have unit grid
spacing. Every row sums to zero, so constants lie in the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import as_image, central_gradient, gaussian_smooth


EED_STENCILS = ("split", "central")


@dataclass(frozen=True)
class EedParams:
    """Contrast ``lam``, presmoothing scale ``sigma`` and spatial stencil of EED.

    ``central`` is the plain central-difference stencil, ``split`` the
    diagonal splitting described in :func:`assemble_eed`.
    """

    lam: float = 0.8
    sigma: float = 0.7
    stencil: str = "split"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.stencil not in EED_STENCILS:
            raise ValueError(f"unknown EED stencil {self.stencil!r}")


def _check_dims(width: int, height: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")


def _canonical(rows, cols, vals, n) -> sp.csr_matrix:
    """Sum duplicates, drop explicit zeros and sort indices."""
    op = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    op.sum_duplicates()
    op.eliminate_zeros()
    op.sort_indices()
    return op


def _from_neighbour_weights(shape, weights) -> sp.csr_matrix:
    """Assemble an operator from ``{(dy, dx): weight_array}`` stencil weights.

    Neighbours outside the grid are reflected back onto it (Neumann); a
    neighbour that lands on the centre pixel drops out. The diagonal is the
    negative sum of the remaining off-diagonal weights.
    """
    height, width = shape
    n = height * width
    yy, xx = np.mgrid[0:height, 0:width]
    centre = (yy * width + xx).ravel()
    rows, cols, vals = [], [], []
    for (dy, dx), w in weights.items():
        ny = np.clip(yy + dy, 0, height - 1)
        nx = np.clip(xx + dx, 0, width - 1)
        nb = (ny * width + nx).ravel()
        w = np.broadcast_to(w, shape).ravel()
        keep = (nb != centre) & (w != 0)
        rows.append(centre[keep])
        cols.append(nb[keep])
        vals.append(w[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals).astype(float)
    diag = -np.bincount(rows, weights=vals, minlength=n)
    rows = np.concatenate([rows, np.arange(n)])
    cols = np.concatenate([cols, np.arange(n)])
    vals = np.concatenate([vals, diag])
    return _canonical(rows, cols, vals, n)


def assemble_laplacian(width: int, height: int) -> sp.csr_matrix:
    """5-point Laplacian: 1 per existing 4-neighbour, minus their count on the diagonal."""
    _check_dims(width, height)
    shape = (height, width)
    one = np.ones(shape)
    return _from_neighbour_weights(
        shape, {(0, 1): one, (0, -1): one, (1, 0): one, (-1, 0): one}
    )


def assemble_biharmonic(width: int, height: int) -> sp.csr_matrix:
    """Negative squared Neumann Laplacian, ``-A @ A``.

    In the interior this is the 13-point stencil of ``-Δ²``.
    """
    a = assemble_laplacian(width, height)
    b = -(a @ a)
    return _canonical(*_coo_triplets(b), b.shape[0])


def _coo_triplets(m):
    coo = m.tocoo()
    return coo.row, coo.col, coo.data


def charbonnier_diffusivity(grad_sq, lam: float):
    """Charbonnier diffusivity ``(1 + s/lam²)^(-1/2)`` of a squared gradient magnitude."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    s = np.asarray(grad_sq, dtype=float)
    if np.any(s < 0):
        raise ValueError("squared gradient magnitude must be nonnegative")
    out = 1.0 / np.sqrt(1.0 + s / (lam * lam))
    return float(out) if out.ndim == 0 else out


def eed_tensor(u, params: EedParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entries (a, b, c) of the EED diffusion tensor ``[[a, b], [b, c]]`` per pixel.

    The eigenvector along the smoothed gradient carries the Charbonnier
    diffusivity, the orthogonal one carries 1. Where the gradient vanishes
    the tensor is the identity.
    """
    us = gaussian_smooth(u, params.sigma)
    gx, gy = central_gradient(us)
    mag_sq = gx * gx + gy * gy
    g = charbonnier_diffusivity(mag_sq, params.lam)
    mag = np.sqrt(mag_sq)
    nz = mag > 0
    vx = np.zeros_like(mag)
    vy = np.zeros_like(mag)
    vx[nz] = gx[nz] / mag[nz]
    vy[nz] = gy[nz] / mag[nz]
    shrink = g - 1.0
    a = 1.0 + shrink * vx * vx
    b = shrink * vx * vy
    c = 1.0 + shrink * vy * vy
    return a, b, c


def _shift(p, dy, dx):
    """``p`` sampled at offset (dy, dx), mirrored across the border."""
    h, w = p.shape
    pp = np.pad(p, 1, mode="symmetric")
    return pp[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]


def _central_weights(a, b, c):
    at = _shift
    return {
        (0, 1): 0.5 * (a + at(a, 0, 1)),
        (0, -1): 0.5 * (a + at(a, 0, -1)),
        (1, 0): 0.5 * (c + at(c, 1, 0)),
        (-1, 0): 0.5 * (c + at(c, -1, 0)),
        (1, 1): 0.25 * (at(b, 0, 1) + at(b, 1, 0)),
        (-1, 1): -0.25 * (at(b, 0, 1) + at(b, -1, 0)),
        (1, -1): -0.25 * (at(b, 0, -1) + at(b, 1, 0)),
        (-1, -1): 0.25 * (at(b, 0, -1) + at(b, -1, 0)),
    }


def _split_weights(a, b, c):
    # a u_x^2 + 2b u_x u_y + c u_y^2
    #   = (a-|b|) u_x^2 + (c-|b|) u_y^2 + |b| (u_x + sign(b) u_y)^2,
    # the last term taken along the diagonal that matches sign(b)
    at = _shift
    ab = np.abs(b)
    ax = a - ab
    cy = c - ab
    rise = np.where(b > 0, ab, 0.0)
    fall = np.where(b < 0, ab, 0.0)
    weights = {
        (0, 1): 0.5 * (ax + at(ax, 0, 1)),
        (0, -1): 0.5 * (ax + at(ax, 0, -1)),
        (1, 0): 0.5 * (cy + at(cy, 1, 0)),
        (-1, 0): 0.5 * (cy + at(cy, -1, 0)),
        (1, 1): 0.5 * (rise + at(rise, 1, 1)),
        (-1, -1): 0.5 * (rise + at(rise, -1, -1)),
        (1, -1): 0.5 * (fall + at(fall, 1, -1)),
        (-1, 1): 0.5 * (fall + at(fall, -1, 1)),
    }
    # diagonal fluxes that would leave the grid are dropped rather than
    # mirrored onto an axial neighbour; this keeps the operator symmetric
    h, w = a.shape
    yy, xx = np.mgrid[0:h, 0:w]
    for dy, dx in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
        inside = (yy + dy >= 0) & (yy + dy < h) & (xx + dx >= 0) & (xx + dx < w)
        weights[dy, dx] = np.where(inside, weights[dy, dx], 0.0)
    return weights


def assemble_eed(u, params: EedParams) -> sp.csr_matrix:
    """Discrete ``div(D(∇u_σ) ∇·)`` on a 3x3 stencil.

    Both stencils use arithmetic means of the tensor entries of the two
    pixels a flux connects, with entries mirrored across the border like
    the image itself. ``central`` treats the mixed term with nested central
    differences, which puts weights of both signs on every diagonal.
    ``split`` rewrites the quadratic form so that the mixed term becomes a
    nonnegative flux along the one diagonal that matches the sign of the
    off-diagonal entry; the result is symmetric and, wherever
    ``min(a, c) >= |b|``, has nonnegative weights. With ``D = I`` both
    reduce exactly to the 5-point Laplacian.
    """
    u = as_image(u)
    a, b, c = eed_tensor(u, params)
    weights = _split_weights(a, b, c) if params.stencil == "split" else _central_weights(a, b, c)
    return _from_neighbour_weights(u.shape, weights)


def assemble(kind: str, shape, u=None, eed: EedParams | None = None) -> sp.csr_matrix:
    """Operator by name: ``homogeneous``, ``biharmonic`` or ``eed`` (needs ``u``)."""
    height, width = shape
    if kind == "homogeneous":
        return assemble_laplacian(width, height)
    if kind == "biharmonic":
        return assemble_biharmonic(width, height)
    if kind == "eed":
        if u is None:
            raise ValueError("the EED operator needs an evolving image u")
        return assemble_eed(u, eed or EedParams())
    raise ValueError(f"unknown operator kind {kind!r}")

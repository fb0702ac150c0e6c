"""Spatial data selection: where to store pixels for a given mask density."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import GREY_MAX, as_image, as_mask, gaussian_smooth, mse, target_count
from .inpaint import DEFAULT_SOLVER, Reconstructor, SolverConfig
from .operators import EedParams, assemble_laplacian
from .rng import SeededRNG


@dataclass(frozen=True)
class AnalyticParams:
    sigma: float = 1.6
    s: float = 0.8
    d: float = 0.04

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.s > 0:
            raise ValueError("exponent s must be positive")
        if not 0 < self.d < 1:
            raise ValueError("density d must lie in (0, 1)")


@dataclass(frozen=True)
class SparsifyParams:
    p: float = 0.1
    q: float = 0.5
    d: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 1 or not 0 < self.q <= 1:
            raise ValueError("p and q must lie in (0, 1]")
        if not 0 < self.d < 1:
            raise ValueError("density d must lie in (0, 1)")


@dataclass(frozen=True)
class ExchangeParams:
    m: int = 20
    iterations: int = 500_000
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("candidate set size m must be at least 1")
        if self.iterations < 1:
            raise ValueError("iteration budget must be positive")


def floyd_steinberg_dither(density) -> np.ndarray:
    """Binarise a density image in [0, 255] by raster-order error diffusion.

    Weights 7/16 (right), 3/16 (below left), 5/16 (below), 1/16 (below
    right). Near the border the weights of the neighbours that exist are
    renormalised so that no error leaves the image; only the residual of
    the very last pixel is lost, so ``255 * count`` plus that residual
    equals ``sum(density)``.
    """
    v = as_image(density, "density").copy()
    if v.min() < 0 or v.max() > GREY_MAX:
        raise ValueError("density values must lie in [0, 255]")
    height, width = v.shape
    out = np.zeros(v.shape, dtype=bool)
    taps = ((0, 1, 7.0), (1, -1, 3.0), (1, 0, 5.0), (1, 1, 1.0))
    for y in range(height):
        row = v[y]
        for x in range(width):
            val = row[x]
            on = val >= 0.5 * GREY_MAX
            out[y, x] = on
            err = val - (GREY_MAX if on else 0.0)
            live = [(dy, dx, w) for dy, dx, w in taps if y + dy < height and 0 <= x + dx < width]
            total = sum(w for _, _, w in live)
            for dy, dx, w in live:
                v[y + dy, x + dx] += err * (w / total)
    return out


def laplacian_magnitude(f, sigma: float, s: float) -> np.ndarray:
    """``|Δ f_σ|^s`` with the Neumann 5-point Laplacian."""
    fs = gaussian_smooth(f, sigma)
    height, width = fs.shape
    lap = assemble_laplacian(width, height) @ fs.ravel()
    return (np.abs(lap) ** s).reshape(fs.shape)


def _is_affine(f: np.ndarray) -> bool:
    """True if ``f`` is a plane up to rounding, i.e. its Laplacian vanishes in the continuum."""
    height, width = f.shape
    yy, xx = np.mgrid[0:height, 0:width]
    design = np.column_stack([np.ones(f.size), xx.ravel(), yy.ravel()])
    coef, *_ = np.linalg.lstsq(design, f.ravel(), rcond=None)
    resid = np.max(np.abs(design @ coef - f.ravel()))
    return resid <= 1e-9 * (1.0 + float(np.max(np.abs(f))))


def analytic_density(f, params: AnalyticParams) -> np.ndarray:
    """Laplacian-magnitude density rescaled to mean ``d * 255`` and clipped to [0, 255].

    Affine images are rejected up front: their Laplacian is zero, and the
    only nonzero values the mirrored boundaries would produce are border
    artefacts.
    """
    f = as_image(f)
    if _is_affine(f):
        raise ValueError("degenerate density: the Laplacian of an affine image vanishes")
    mag = laplacian_magnitude(f, params.sigma, params.s)
    mean = mag.mean()
    if not mean > 0:
        raise ValueError("degenerate density: Laplacian magnitude vanishes identically")
    return np.clip(mag * (params.d * GREY_MAX / mean), 0.0, GREY_MAX)


def _fix_count(mask: np.ndarray, score: np.ndarray, count: int) -> np.ndarray:
    """Add the highest-scoring unset or drop the lowest-scoring set pixels until ``count``."""
    flat = mask.ravel().copy()
    sc = score.ravel()
    idx = np.arange(flat.size)
    have = int(flat.sum())
    if have < count:
        cand = idx[~flat]
        order = np.lexsort((cand, -sc[cand]))
        flat[cand[order[: count - have]]] = True
    elif have > count:
        cand = idx[flat]
        order = np.lexsort((cand, sc[cand]))
        flat[cand[order[: have - count]]] = False
    return flat.reshape(mask.shape)


def analytic_mask(f, params: AnalyticParams) -> np.ndarray:
    """Dithered Laplacian-magnitude mask with exactly ``round(d |J|)`` pixels."""
    f = as_image(f)
    dens = analytic_density(f, params)
    mask = floyd_steinberg_dither(dens)
    return _fix_count(mask, dens, target_count(params.d, f.size))


def sparsification_bound(p: float, q: float, d: float) -> int:
    """Upper bound ``ceil(ln d / ln(1 - p q))`` on sparsification iterations."""
    if p * q >= 1:
        return 1
    return int(math.ceil(math.log(d) / math.log(1.0 - p * q)))


class SparsifyLog(NamedTuple):
    iteration: int
    mask_size: int
    mse: float


@dataclass
class SparsifyResult:
    mask: np.ndarray
    iterations: int
    log: list = field(default_factory=list)


def _smallest_errors(cands: np.ndarray, err: np.ndarray, k: int) -> np.ndarray:
    """The ``k`` candidates with smallest error; ties go to the lowest index."""
    order = np.lexsort((cands, err[cands]))
    return cands[order[:k]]


def probabilistic_sparsification(
    f,
    op_kind: str = "homogeneous",
    params: SparsifyParams = SparsifyParams(),
    cfg: SolverConfig = DEFAULT_SOLVER,
    eed: EedParams | None = None,
) -> SparsifyResult:
    """Greedy randomised removal of the least significant mask pixels.

    Starting from the full mask, each iteration removes ``ceil(p |K|)``
    random candidates, inpaints, puts back the candidates with the largest
    local error and permanently drops the ``ceil(q |T|)`` with the smallest
    one. The last iteration drops only as many as needed to land on exactly
    ``round(d |J|)`` pixels.
    """
    f = as_image(f)
    rec = Reconstructor(f.shape, op_kind, eed, cfg)
    rng = SeededRNG(params.seed)
    n = f.size
    target = target_count(params.d, n)
    if target < 1:
        raise ValueError("density too low: the mask would be empty")
    flat_f = f.ravel()
    keep = np.ones(n, dtype=bool)
    log = []
    it = 0
    u = None
    while keep.sum() > target:
        it += 1
        members = np.flatnonzero(keep)
        n_cand = min(members.size, max(1, math.ceil(params.p * members.size)))
        cands = np.sort(rng.sample(members, n_cand))
        n_drop = min(max(1, math.ceil(params.q * n_cand)), members.size - target)
        trial = keep.copy()
        trial[cands] = False
        if trial.any():
            u = rec(trial.reshape(f.shape), f, u0=u).ravel()
            err = (u - flat_f) ** 2
            drop = _smallest_errors(cands, err, n_drop)
        else:
            drop = cands[:n_drop]
        keep[drop] = False
        log.append(SparsifyLog(it, int(keep.sum()), mse(u, flat_f) if u is not None else 0.0))
    return SparsifyResult(keep.reshape(f.shape), it, log)


class ExchangeLog(NamedTuple):
    iteration: int
    mse: float
    accepted: bool


@dataclass
class ExchangeResult:
    mask: np.ndarray
    mse: float
    accepted: int
    log: list = field(default_factory=list)


def nonlocal_pixel_exchange(
    f,
    mask,
    op_kind: str = "homogeneous",
    params: ExchangeParams = ExchangeParams(),
    cfg: SolverConfig = DEFAULT_SOLVER,
    eed: EedParams | None = None,
) -> ExchangeResult:
    """Swap mask pixels for badly reconstructed non-mask pixels while the MSE drops.

    Each iteration draws ``m`` non-mask candidates, moves the one with the
    largest local error into the mask and a random mask pixel out, and keeps
    the swap only if the MSE strictly decreases. Runs for the full budget.
    """
    f = as_image(f)
    c = as_mask(mask, f.shape).ravel().copy()
    if not c.any():
        raise ValueError("empty mask")
    if params.m > int((~c).sum()):
        raise ValueError(f"m = {params.m} exceeds the number of non-mask pixels")
    rec = Reconstructor(f.shape, op_kind, eed, cfg)
    rng = SeededRNG(params.seed)
    flat_f = f.ravel()
    u = rec(c.reshape(f.shape), f).ravel()
    err = (u - flat_f) ** 2
    best = float(np.mean(err))
    log = []
    accepted = 0
    for it in range(1, params.iterations + 1):
        outside = np.flatnonzero(~c)
        cands = rng.sample(outside, params.m)
        # largest error wins; lowest index breaks ties
        order = np.lexsort((cands, -err[cands]))
        enter = cands[order[0]]
        inside = np.flatnonzero(c)
        leave = inside[rng.below(inside.size)]
        trial = c.copy()
        trial[leave] = False
        trial[enter] = True
        u_new = rec(trial.reshape(f.shape), f, u0=u.reshape(f.shape)).ravel()
        err_new = (u_new - flat_f) ** 2
        value = float(np.mean(err_new))
        ok = value < best
        if ok:
            c, u, err, best = trial, u_new, err_new, value
            accepted += 1
        log.append(ExchangeLog(it, best, ok))
    return ExchangeResult(c.reshape(f.shape), best, accepted, log)

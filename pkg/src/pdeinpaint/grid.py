"""Grid-level helpers shared by every other module.

Images are 2D float arrays of shape ``(height, width)`` holding grey values
in [0, 255]; pixel ``i`` of the flattened (row-major) image is at
``(i // width, i % width)``. A 1D signal is an image of height 1. Masks are
boolean arrays of the same shape; ``True`` marks a stored pixel.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

GREY_MAX = 255.0


def as_image(f, name: str = "image") -> np.ndarray:
    """Validate and return ``f`` as a finite 2D float array."""
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_mask(c, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.asarray(c)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {arr.shape}")
    arr = arr.astype(bool)
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"mask shape {arr.shape} does not match image shape {tuple(shape)}")
    return arr


def density(mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    return float(mask.sum()) / mask.size


def target_count(d: float, n_pixels: int) -> int:
    """Number of mask pixels for density ``d``, rounded half up."""
    return int(math.floor(d * n_pixels + 0.5))


def mse(u, f) -> float:
    """Mean squared error between a reconstruction ``u`` and the original ``f``."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if u.shape != f.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {f.shape}")
    diff = f - u
    return float(np.mean(diff * diff))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian truncated at radius ceil(3 sigma), normalised to unit sum."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(f, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution with mirrored boundaries.

    ``sigma == 0`` returns the input unchanged (same values, new array).
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    f = as_image(f)
    if sigma == 0:
        return f.copy()
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(f, k, axis=1, mode="reflect")
    if f.shape[0] > 1:
        out = ndimage.correlate1d(out, k, axis=0, mode="reflect")
    return out


def central_gradient(u) -> tuple[np.ndarray, np.ndarray]:
    """Central differences (h = 1) with mirrored boundaries; returns (u_x, u_y)."""
    u = as_image(u)
    p = np.pad(u, 1, mode="symmetric")
    ux = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    uy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return ux, uy

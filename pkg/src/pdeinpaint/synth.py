"""Deterministic analytic test images."""

from __future__ import annotations

import numpy as np

from .grid import GREY_MAX

DISK_RADIUS = 20.0


def _coords(width: int, height: int):
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    return xx, yy


def disk(width: int, height: int) -> np.ndarray:
    """255 inside a radius-20 disk about the grid centre, 0 outside."""
    xx, yy = _coords(width, height)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= DISK_RADIUS**2
    return np.where(inside, GREY_MAX, 0.0)


def quadratic(width: int, height: int) -> np.ndarray:
    """Paraboloid ``k (x^2 + y^2)`` scaled so the far corner reaches 255."""
    xx, yy = _coords(width, height)
    r2 = xx**2 + yy**2
    return GREY_MAX * r2 / max(r2.max(), 1.0)


def affine(width: int, height: int) -> np.ndarray:
    """Plane rising from 0 at the origin to 255 at the far corner."""
    xx, yy = _coords(width, height)
    return GREY_MAX * (xx + yy) / max(width + height - 2, 1)


def steps(width: int, height: int) -> np.ndarray:
    """Four vertical bands of constant grey separated by sharp edges."""
    xx, _ = _coords(width, height)
    band = np.minimum((4 * xx / width).astype(int), 3)
    return np.array([30.0, 200.0, 90.0, 160.0])[band]


def gauss_blobs(width: int, height: int) -> np.ndarray:
    """Sum of three fixed Gaussian bumps on a grey background."""
    xx, yy = _coords(width, height)
    out = np.full(xx.shape, 40.0)
    for (fx, fy, fs, amp) in ((0.3, 0.35, 0.12, 180.0), (0.7, 0.6, 0.18, 150.0), (0.45, 0.8, 0.08, 120.0)):
        cx, cy = fx * (width - 1), fy * (height - 1)
        s = fs * max(width, height)
        out += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s))
    return np.clip(out, 0.0, GREY_MAX)


GENERATORS = {
    "disk": disk,
    "quadratic": quadratic,
    "affine": affine,
    "steps": steps,
    "gauss-blobs": gauss_blobs,
}


def synth_image(name: str, width: int, height: int) -> np.ndarray:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown synthetic image {name!r}; choose from {sorted(GENERATORS)}") from None
    return gen(width, height)

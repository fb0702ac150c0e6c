"""Shared generators for the test suite."""

import numpy as np

from pdeinpaint.spatial1d import ConvexFunction1D


def random_convex(seed: int) -> ConvexFunction1D:
    """``alpha exp(beta x) + gamma x^2 + delta x`` with random coefficients and domain."""
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.1, 2.0)
    beta = rng.choice([-1, 1]) * rng.uniform(0.2, 1.5)
    gamma = rng.uniform(0.0, 1.0)
    delta = rng.uniform(-3.0, 3.0)
    a = rng.uniform(-4.0, 0.0)
    b = a + rng.uniform(1.0, 6.0)
    integral = (
        alpha * (np.exp(beta * b) - np.exp(beta * a)) / beta
        + gamma * (b**3 - a**3) / 3
        + delta * (b**2 - a**2) / 2
    )
    return ConvexFunction1D(
        f=lambda x: alpha * np.exp(beta * x) + gamma * x * x + delta * x,
        df=lambda x: alpha * beta * np.exp(beta * x) + 2 * gamma * x + delta,
        a=float(a),
        b=float(b),
        integral=float(integral),
        name=f"random{seed}",
    )


def random_instance(seed: int, h: int, w: int, p: float = 0.2):
    """Random image in [0, 255] and a random nonempty mask."""
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, 255, (h, w))
    mask = rng.uniform(size=(h, w)) < p
    mask[rng.integers(h), rng.integers(w)] = True
    return f, mask

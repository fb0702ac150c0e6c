"""Seeded randomness for the stochastic mask optimisers.

All draws come from the raw 64-bit output stream of PCG64 (a fixed,
documented algorithm), turned into bounded integers by rejection sampling.
Higher-level numpy ``Generator`` methods are avoided on purpose: their
algorithms may change between numpy releases, the raw PCG64 stream does not.
"""

from __future__ import annotations

import numpy as np

_U64 = 1 << 64


class SeededRNG:
    """Deterministic random source driven by a 64-bit seed."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < _U64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def _next_u64(self) -> int:
        return int(self._bits.random_raw())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _U64 - (_U64 % n)
        while True:
            x = self._next_u64()
            if x < limit:
                return x % n

    def sample(self, population, k: int) -> np.ndarray:
        """Draw ``k`` distinct elements of ``population`` (partial Fisher-Yates).

        The order of the returned elements is the draw order.
        """
        pool = np.array(population, copy=True)
        n = pool.size
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} items from {n}")
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def uniform(self, size: int) -> np.ndarray:
        """Floats in [0, 1) built from the top 53 bits of the raw stream."""
        raw = np.array([self._next_u64() >> 11 for _ in range(size)], dtype=np.float64)
        return raw / float(1 << 53)

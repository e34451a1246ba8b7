"""Seeded 64-bit xorshift PRNG used everywhere determinism matters.

All simulator and model-initialization randomness flows through this
generator so runs are bit-reproducible across platforms: the state update
is pure 64-bit integer arithmetic, and floats are derived from the high
53 bits only.
"""

import math

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


class Xorshift128Plus:
    """xorshift128+ generator seeded via splitmix64."""

    def __init__(self, seed: int):
        state, s0 = _splitmix64(seed & _MASK)
        _, s1 = _splitmix64(state)
        # all-zero state is the one forbidden configuration
        self._s0 = s0 or 1
        self._s1 = s1 or 2
        self._gauss_cache: float | None = None

    def next_u64(self) -> int:
        s1 = self._s0
        s0 = self._s1
        result = (s0 + s1) & _MASK
        s1 ^= (s1 << 23) & _MASK
        self._s0 = s0
        self._s1 = (s1 ^ s0 ^ (s1 >> 18) ^ (s0 >> 5)) & _MASK
        return result

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def randint(self, low: int, high: int) -> int:
        """Integer in [low, high] inclusive. Modulo bias is irrelevant at
        the span sizes used here (< 2^32)."""
        span = high - low + 1
        if span <= 0:
            raise ValueError(f"empty range [{low}, {high}]")
        return low + self.next_u64() % span

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        if self._gauss_cache is not None:
            z = self._gauss_cache
            self._gauss_cache = None
        else:
            # Box-Muller; u1 is kept away from 0 by construction of uniform()
            u1 = self.uniform()
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1 + 1e-300))
            z = r * math.cos(2.0 * math.pi * u2)
            self._gauss_cache = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def normal_array(self, shape, sigma: float = 1.0):
        import numpy as np

        n = 1
        for s in shape:
            n *= s
        vals = [self.normal(0.0, sigma) for _ in range(n)]
        return np.array(vals, dtype=np.float64).reshape(shape)

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(0, i)
            seq[i], seq[j] = seq[j], seq[i]

"""Seeded pseudo-randomness shared by every stochastic operation.

All draws go through numpy's PCG64 bit generator, seeded with a 64-bit
unsigned integer. PCG64 streams are identical across platforms and numpy
releases for the methods used here (uniform, normal, integers, permutation).
"""
from typing import Optional

import numpy as np

ALGORITHM = "PCG64"
MAX_SEED = 2**64 - 1


class SeededRng:
    """Single-owner random stream. Hand each concurrent trial its own instance."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= MAX_SEED:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.algorithm = ALGORITHM
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, algorithm={self.algorithm!r})"

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def sklearn_seed(self) -> int:
        """Draw a 31-bit seed for scikit-learn helpers that take ``random_state``."""
        return int(self._gen.integers(0, 2**31 - 1))

    def spawn(self) -> "SeededRng":
        """Derive an independent child stream, deterministic in the parent state."""
        return SeededRng(int(self._gen.integers(0, MAX_SEED, dtype=np.uint64, endpoint=True)))


def draw_seed(entropy: Optional[int] = None) -> int:
    """Draw a fresh 64-bit seed from OS entropy (used when a command gets no --seed)."""
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])

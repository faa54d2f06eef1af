"""Seeded, stream-addressable random draws.

Every random choice in the package goes through :class:`SeededRng`.  A stream
is identified by the root seed plus an integer key path, so the draws for
component ``i`` at mode ``j`` do not depend on the order in which other
components were processed.
"""
import numpy as np

_MASK64 = (1 << 64) - 1


class SeededRng:
    """Philox (counter-based) generator addressed by ``(seed, key)``.

    Parameters
    ----------
    seed : int
        Root seed; reduced modulo 2**64 so negative values are accepted.
    key : tuple of int, optional
        Stream path below the root.
    """

    def __init__(self, seed, key=()):
        self.seed = int(seed) & _MASK64
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, key={self.key})"

    def stream(self, *key):
        """Independent child stream; same arguments give the same draws."""
        return SeededRng(self.seed, self.key + key)

    @property
    def generator(self):
        return self._gen

    def integers(self, high):
        return int(self._gen.integers(high))

    def standard_normal(self, size):
        return self._gen.standard_normal(size)

    def uniform(self, low, high, size):
        return self._gen.uniform(low, high, size)


def derive_seed(seed, *key):
    """A 64-bit integer seed for the sub-run identified by ``key``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)

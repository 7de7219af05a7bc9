"""Self-contained seeded generator used for splitting and subsampling.

SplitMix64 (Steele, Lea & Flood's 64-bit finalizer with the golden-gamma
increment 0x9E3779B97F4A7C15) is small enough to document exhaustively and
produces the same stream on every platform, which keeps dataset splits and
subsample draws reproducible without depending on any library's RNG
internals. Not suitable for cryptography.

Shuffles are defined as "sort by random key": element i receives the
(i+1)-th output of the stream and the permutation is the stable argsort of
those keys. Ties between keys (probability ~n^2/2^64) fall back to index
order via the stable sort, so every operation stays deterministic.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit stream with a single integer seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def block(self, n: int) -> np.ndarray:
        """Next ``n`` outputs of the stream as a uint64 array.

        Matches n consecutive calls to :meth:`next_u64`; modular 64-bit
        wraparound is the point, so overflow warnings are suppressed.
        """
        with np.errstate(over="ignore"):
            steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
            z = np.uint64(self._state) + steps
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            out = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK64
        return out

    def shuffled(self, n: int) -> np.ndarray:
        """A seeded permutation of range(n) (stable key-sort shuffle)."""
        return np.argsort(self.block(n), kind="stable").astype(np.int64)

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from range(n), in ascending order.

        The first k entries of the key-sort shuffle form a uniform sample;
        sorting them fixes the downstream iteration order so later
        floating-point sums do not depend on draw order.
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        picked = self.shuffled(n)[:k]
        picked.sort()
        return picked

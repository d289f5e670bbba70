"""SplitMix64 keystreams and the keyed permutations built on them.

Every keyed choice in the cipher is drawn from one of these streams, so a
ciphertext is reproducible from its KeyBundle alone on any platform.
"""

from __future__ import annotations

import numpy as np

from .core import MASK64

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO64 = 1 << 64


class Stream:
    """Single-owner SplitMix64 generator."""

    __slots__ = ("state", "draws")

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64
        self.draws = 0

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        self.draws += 1
        return z ^ (z >> 31)

    def next_bounded(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection, never by plain modulo."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        limit = (_TWO64 // bound) * bound
        while True:
            v = self.next_u64()
            if v < limit:
                return v % bound

    def bounded_array(self, bound: int, count: int) -> np.ndarray:
        return np.fromiter((self.next_bounded(bound) for _ in range(count)), np.int64, count)


def stream_new(seed: int) -> Stream:
    return Stream(seed)


def next_bounded(s: Stream, bound: int) -> int:
    return s.next_bounded(bound)


def keyed_permutation(seed: int, length: int) -> np.ndarray:
    """Fisher-Yates shuffle of ``range(length)`` driven by ``stream_new(seed)``."""
    if length < 1:
        raise ValueError("length must be >= 1")
    s = Stream(seed)
    perm = list(range(length))
    for i in range(length - 1, 0, -1):
        j = s.next_bounded(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=perm.dtype)
    return inv

"""Portable 64-bit PRNG: xoshiro256** seeded through SplitMix64.

Every random draw in the package (weight init, random decomposition,
synthetic shapes, crop viewpoints) goes through this generator so that a
given seed produces the same stream on every platform and numpy version.

Reference algorithms: Blackman & Vigna, "Scrambled linear pseudorandom
number generators" (xoshiro256**), and Steele et al. SplitMix64.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator.

    The 256-bit state is filled with four consecutive SplitMix64 outputs of
    ``seed``. ``random()`` returns ``(next >> 11) * 2**-53`` in [0, 1).
    """

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    @classmethod
    def for_stream(cls, seed: int, label: str) -> "Xoshiro256":
        """Independent stream keyed by a text label (e.g. a tensor name)."""
        return cls((int(seed) ^ fnv1a64(label)) & MASK64)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def random_array(self, n: int) -> np.ndarray:
        out = np.empty(int(n), dtype=np.float64)
        # Inlined state update: this loop dominates weight initialisation.
        s0, s1, s2, s3 = self._s
        scale = 1.0 / 9007199254740992.0
        for i in range(int(n)):
            x = (s1 * 5) & MASK64
            r = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
            t = (s1 << 17) & MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
            out[i] = (r >> 11) * scale
        self._s = [s0, s1, s2, s3]
        return out

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        return low + (high - low) * self.random_array(n)

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection on the top bits."""
        if n <= 0:
            raise ValueError("randbelow needs n > 0")
        bits = max(1, (n - 1).bit_length())
        while True:
            v = self.next_u64() >> (64 - bits)
            if v < n:
                return v

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)`` (Durstenfeld, back to front)."""
        perm = list(range(int(n)))
        for i in range(len(perm) - 1, 0, -1):
            j = self.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.asarray(perm, dtype=np.int64)

    def unit_vector(self) -> np.ndarray:
        """Uniform direction on the unit sphere (Archimedes' z-slab method)."""
        z = 2.0 * self.random() - 1.0
        phi = 2.0 * math.pi * self.random()
        rho = math.sqrt(max(0.0, 1.0 - z * z))
        return np.array([rho * math.cos(phi), rho * math.sin(phi), z])

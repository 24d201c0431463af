"""Portable seeded random numbers: xorshift64* seeded through splitmix64.

The integer streams are fully specified here so that any language can
reproduce them bit for bit.

Seeding (splitmix64 finaliser, all arithmetic mod 2**64)::

    z = x + 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

A generator for ``(seed, stream)`` starts from
``state = splitmix64(splitmix64(seed mod 2**64) ^ stream)``; a zero state
is replaced by ``0x9E3779B97F4A7C15``.

Step (xorshift64*, Vigna 2016, shift triple 12/25/27)::

    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    output = x * 0x2545F4914F6CDD1D

Uniform doubles are ``(output >> 11) * 2**-53`` in ``[0, 1)``. Normal
variates use the Box-Muller transform on consecutive uniform pairs
``(u1, u2)``: ``r = sqrt(-2 ln(1 - u1))``, giving ``r cos(2 pi u2)`` then
``r sin(2 pi u2)``. The uniform stream is exact everywhere; normal
variates additionally depend on the platform's ``log``/``cos``/``sin``.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MUL = 0x2545F4914F6CDD1D
_INV53 = 1.0 / (1 << 53)


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for an index path below ``seed``."""
    s = splitmix64(seed & MASK64)
    for p in path:
        s = splitmix64(s ^ (p & MASK64))
    return s


class XorShift64Star:
    def __init__(self, seed: int, stream: int = 0):
        state = splitmix64(splitmix64(seed & MASK64) ^ (stream & MASK64))
        self.state = state or GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MUL) & MASK64

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def uniforms(self, n: int) -> np.ndarray:
        # inlined loop; roughly 3x faster than calling uniform() n times
        x = self.state
        out = [0.0] * n
        for i in range(n):
            x ^= x >> 12
            x ^= (x << 25) & MASK64
            x ^= x >> 27
            out[i] = (((x * _MUL) & MASK64) >> 11) * _INV53
        self.state = x
        return np.array(out, dtype=np.float64)

    def normals(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        out = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1).reshape(-1)
        return out[:n]

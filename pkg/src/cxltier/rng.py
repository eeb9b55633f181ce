"""Seedable xoshiro256** PRNG used for all reproducible test vectors and workloads.

The repository fixes one generator so that every derived value (incompressible
line vectors, synthetic page contents, workload op streams) is reproducible
bit-for-bit across platforms and Python versions.  The generator is
xoshiro256** with its state seeded from splitmix64, both per the published
reference recurrences.  Output bytes are the 64-bit outputs serialized
little-endian.

Seed 42 is reserved for the incompressible ("all RAW") vectors.
"""

from __future__ import annotations

_M64 = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def derive_seed(base: int, *words: int) -> int:
    """Fold extra words into a base seed through splitmix64 steps.

    Used to give each page / stream its own decorrelated seed while staying
    a pure function of the master seed.
    """
    state = base & _M64
    for w in words:
        state, out = splitmix64_next(state ^ (w & _M64))
        state = out
    state, out = splitmix64_next(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _M64


class Xoshiro256StarStar:
    """xoshiro256** seeded via four successive splitmix64 outputs."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _M64
        state, self._s0 = splitmix64_next(state)
        state, self._s1 = splitmix64_next(state)
        state, self._s2 = splitmix64_next(state)
        state, self._s3 = splitmix64_next(state)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _M64, 7) * 9) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def bytes(self, n: int) -> bytes:
        """First n bytes of the little-endian serialized u64 output stream."""
        words = (n + 7) // 8
        out = b"".join(self.next_u64().to_bytes(8, "little") for _ in range(words))
        return out[:n]

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection; bound >= 1."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        # Rejection zone keeps the draw exactly uniform.
        limit = _M64 - (_M64 + 1) % bound
        while True:
            v = self.next_u64()
            if v <= limit:
                return v % bound

    def float01(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


# Seed reserved for the incompressible vectors: the first 64 output bytes of
# Xoshiro256StarStar(42) form a cache line no non-RAW scheme can encode.
INCOMPRESSIBLE_SEED = 42

"""Seedable 64-bit PRNG with explicitly serializable state.

A splitmix64 generator is used instead of ``random.Random`` because the
engine must (a) include the generator state in state digests, (b) persist it
in traces as a single integer, and (c) reproduce sequences bit-exactly across
platforms and Python versions.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Derive a 64-bit seed from an arbitrary tuple of hashable parts.

    Stable across processes and platforms (never uses builtin ``hash``).
    """
    key = ":".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


class Rng:
    """splitmix64 stream; state is a single 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for small n."""
        return self.next_u64() % n

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self.next_u64() / 2.0**64

    def clone(self) -> "Rng":
        other = Rng(0)
        other.state = self.state
        return other

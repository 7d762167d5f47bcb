"""Counter-derived SplitMix64 streams.

Every photon history owns an independent stream keyed by ``(seed, index)``::

    key   = mix64(mix64(seed) ^ (index * STREAM_STRIDE mod 2**64))
    state_k = key + k * GOLDEN            (k = 1, 2, ...)
    draw_k  = mix64(state_k)

so a history's random numbers depend only on the master seed and the photon
index, never on which worker traced it or in what order.  Scan points derive
their own master seed the same way through :func:`derive_seed`.

The compiled kernel implements the identical construction in C; the two must
stay in lock-step (checked by the backend-equivalence tests).
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
STREAM_STRIDE = 0xD1B54A32D192ED03
SCAN_STRIDE = 0xAF251AF3B0F025B5
TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, index: int) -> int:
    return mix64(mix64(seed) ^ ((index * STREAM_STRIDE) & MASK64))


def derive_seed(seed: int, point: int) -> int:
    """Master seed for scan point ``point`` (0-based)."""
    return mix64(seed ^ (((point + 1) * SCAN_STRIDE) & MASK64))


class PhotonStream:
    """Uniform (0, 1) draws for one photon history."""

    __slots__ = ("state",)

    def __init__(self, seed: int, index: int = 0):
        self.state = stream_key(seed, index)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        # open interval: safe for log()
        return ((self.next_u64() >> 11) + 0.5) * TWO_M53

    def exponential(self) -> float:
        return -math.log(self.uniform())

"""Deterministic 64-bit seed derivation for trial streams.

Trial i of a run with master seed s gets the seed

    spawn(s, i) = mix64((s + (i + 1) * GOLDEN) mod 2^64)

where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the standard splitmix64
finalizer (xor-shift / multiply avalanche). The formula is pure integer
arithmetic, so derived streams are stable across platforms and Python
versions. Nested derivation (stage seeds inside a trial) reuses spawn on
the trial seed with a stage index.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    x &= MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK
    x ^= x >> 31
    return x


def spawn(master_seed: int, index: int) -> int:
    """Seed for the index-th child stream of master_seed."""
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return mix64((master_seed + (index + 1) * GOLDEN) & MASK)

"""Deterministic seed derivation for parallel, reproducible sampling."""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, index: int) -> int:
    """Mix a 64-bit master seed with a subtask index.

    Uses the splitmix64 finalizer, so nearby (seed, index) pairs map to
    well-separated generator seeds.  Pure function: the same arguments
    always produce the same value, which is what makes member-level and
    trial-level parallelism bit-reproducible.
    """
    z = (master_seed + _GOLDEN * (index + 1)) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK

"""Deterministic seed derivation.

Every sampled object in the pipeline is driven by a ``random.Random``
seeded through a splitmix64 chain from the master seed, so any instance
can be regenerated from (master seed, stable counters) alone.
"""

from __future__ import annotations

import random

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 step; maps a 64-bit state to a well-mixed 64-bit value."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, *counters: int | str) -> int:
    """Derive a child seed from a master seed and a stable counter path.

    String counters are folded in bytewise so call sites can use readable
    tags ("train", "ATE") without colliding with integer indices.
    """
    state = master & _MASK
    for c in counters:
        if isinstance(c, str):
            for b in c.encode("utf-8"):
                state = splitmix64(state ^ b)
            state = splitmix64(state ^ 0x5F)
        else:
            state = splitmix64(state ^ (c & _MASK))
    return state


def derive_rng(master: int, *counters: int | str) -> random.Random:
    return random.Random(derive_seed(master, *counters))

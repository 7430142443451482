"""Seedable counter-mode random streams.

Every random draw in the package comes from a Philox stream keyed by a
``(seed, index)`` pair, so any component can be replayed in isolation and
independent messages get provably disjoint streams. Philox is counter
based, so equal keys give bitwise-identical sequences on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the stream for ``(seed, index)``.

    The 128-bit Philox key is ``seed * 2**64 + index``: the high word
    selects the seed domain, the low word the substream. Distinct pairs
    never collide.
    """
    key = ((int(seed) & _MASK64) << 64) | (int(index) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from an existing stream."""
    return int(rng.integers(0, 1 << 63))

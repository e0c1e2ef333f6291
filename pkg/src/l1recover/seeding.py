"""Reproducible random streams.

A :class:`Seed` is a ``(base, stream)`` pair keyed into a counter-based
Philox generator, so any trial can be regenerated on its own, in any order
and on any worker. Substreams (retries, auxiliary draws) are obtained by
jumping the counter, which never overlaps the parent stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    base: int = 0
    stream: int = 0

    def generator(self, substream: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(key=[self.base & _MASK64, self.stream & _MASK64])
        if substream:
            bitgen = bitgen.jumped(substream)
        return np.random.Generator(bitgen)

    def child(self, stream: int) -> "Seed":
        return Seed(self.base, stream)


def as_seed(seed) -> Seed:
    """Accept a Seed, an int (base with stream 0) or a (base, stream) pair."""
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, (tuple, list)):
        base, stream = seed
        return Seed(int(base), int(stream))
    return Seed(int(seed), 0)


def standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller transform over the generator's uniform source.

    Values are produced in pairs and consumed in order, so the first ``k``
    outputs of a longer draw equal a draw of size ``k`` (for even ``k``).
    """
    npairs = (size + 1) // 2
    u = rng.random(2 * npairs)
    u1 = 1.0 - u[0::2]  # in (0, 1], keeps log finite
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * npairs)
    out[0::2] = radius * np.cos(2.0 * np.pi * u2)
    out[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return out[:size]


def random_signs(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.where(rng.random(size) < 0.5, -1.0, 1.0)

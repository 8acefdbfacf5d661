"""Seedable, splittable noise streams for reproducible simulation.

Every sampling chain owns a `NoiseStream` derived from (seed, chain index)
via `numpy.random.SeedSequence` spawning, so chain i draws the same
trajectory regardless of how many chains run alongside it.  The bit
generator is Philox (counter-based, cheap to split); standard normals come
from numpy's ziggurat implementation, which is deterministic for a fixed
numpy version.  Streams count how many normal variates they hand out, which
lets tests assert exact consumption (e.g. that a deterministic sampler stops
drawing after its initial state).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


class NoiseStream:
    """A counted source of standard normal draws."""

    def __init__(self, seed_seq: SeedSequence):
        self._generator = Generator(Philox(seed_seq))
        self.normals_drawn = 0

    @classmethod
    def from_seed(cls, seed: int) -> "NoiseStream":
        return cls(SeedSequence(seed))

    def standard_normal(self, shape) -> np.ndarray:
        out = self._generator.standard_normal(shape)
        self.normals_drawn += out.size
        return out

    def integers(self, low, high, size=None):
        return self._generator.integers(low, high, size=size)

    def uniform(self, low, high, size=None):
        return self._generator.uniform(low, high, size=size)

    def choice(self, n, size, p):
        return self._generator.choice(n, size=size, p=p)


def chain_streams(seed: int, num_chains: int) -> list[NoiseStream]:
    """Independent per-chain streams; chain i depends only on (seed, i)."""
    root = SeedSequence(seed)
    return [NoiseStream(child) for child in root.spawn(num_chains)]


def substream(seed: int, index: int) -> NoiseStream:
    """The index-th child stream of `seed`, without building its siblings."""
    return NoiseStream(SeedSequence(seed, spawn_key=(index,)))

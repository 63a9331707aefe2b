"""
Deterministic random streams.

Rng wraps numpy's PCG64 bit generator seeded from a SeedSequence. Substreams
are derived from a tag (e.g. "dataset", "gan", "cnn/TensileX", "search") so
each component draws from an independent, platform-stable stream.
"""
import hashlib

import numpy as np


def _tag_key(tag):
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class Rng:
    def __init__(self, seed, spawn_key=()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.spawn_key = tuple(spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, tag):
        """Independent child stream; same (seed, tag path) -> same stream."""
        return Rng(self.seed, self.spawn_key + _tag_key(tag))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def next_seed(self):
        """A 32-bit seed for APIs that take plain integers (scipy qmc)."""
        return int(self.generator.integers(0, 2**32 - 1))

    def __repr__(self):
        return f"Rng(seed={self.seed}, depth={len(self.spawn_key) // 4})"

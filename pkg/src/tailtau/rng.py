"""Seeded, partition-invariant random streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def derive_stream_id(*key) -> int:
    """Stable 63-bit id from a key tuple (independent of ``PYTHONHASHSEED``)."""
    text = "\x1f".join(repr(k) for k in key).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


@dataclass(frozen=True)
class RngStream:
    """``(seed, stream_id)`` names one reproducible random sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key) -> "RngStream":
        return RngStream(self.seed, derive_stream_id(self.stream_id, *key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")

"""Labeled, splittable random streams.

Every sampler asks for ``stream(seed, *labels)``. Streams with different
labels are statistically independent, and adding a new labeled draw somewhere
never shifts the numbers produced by an existing one.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _label_word(label) -> int:
    digest = hashlib.blake2b(repr(label).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *labels) -> np.random.Generator:
    """Return a generator keyed by ``seed`` and a path of labels."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_label_word(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *labels) -> int:
    """A 63-bit child seed, for handing to APIs that take an integer seed."""
    return int(stream(seed, "derive", *labels).integers(0, 2**63 - 1))

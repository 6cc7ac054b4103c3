"""Reproducible random streams.

All randomness comes from numpy's Philox4x64-10 counter-based generator.  A
stream is identified by a master seed plus a tuple of keys (experiment tag,
replica number, ...); the keys become the ``spawn_key`` of a
``SeedSequence`` so distinct key tuples give statistically independent
streams regardless of the order in which they are created.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    if k < 0:
        raise ValueError(f"stream keys must be non-negative, got {k}")
    return int(k)


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Generator for the stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed: int | np.random.Generator, *keys: int | str) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, *keys)

"""Seeded random streams.

Every stochastic step draws from a stream derived from the master seed and a
tuple of tags, so results never depend on call order or worker scheduling.
"""
from __future__ import annotations

import zlib

import numpy as np


def _tag_word(tag: int | str) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError(f"negative stream tag: {tag}")
        return int(tag)
    # crc32 is stable across interpreter runs, unlike hash()
    return zlib.crc32(str(tag).encode("utf-8"))


def derive(master_seed: int, *tags: int | str) -> np.random.Generator:
    """Return the generator for ``(master_seed, *tags)``; pure in its inputs."""
    seq = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(_tag_word(t) for t in tags))
    return np.random.Generator(np.random.PCG64(seq))

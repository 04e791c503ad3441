"""Deterministic named substreams derived from a single integer seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return a generator for stage ``name`` under master ``seed``.

    Distinct names (and distinct ``extra`` integers, e.g. chunk indices)
    give statistically independent streams; the same arguments always
    give the same stream.
    """
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [seed, stream_key(name), *(int(e) for e in extra)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, name: str) -> int:
    """Integer child seed, for handing a stage its own master seed."""
    return int(substream(seed, name).integers(0, 2**31 - 1))

"""Named, reproducible RNG substreams derived from one base seed."""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *tags: str) -> np.random.Generator:
    """Return the generator for the substream of ``seed`` named by ``tags``.

    Distinct tag tuples yield statistically independent streams, and the
    mapping is stable across processes and platforms, so components that
    consume randomness (splitting, simulation, tie-breaking, folding) stay
    individually reproducible no matter which of them run or in what order.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    keys = [zlib.crc32(tag.encode("utf-8")) for tag in tags]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *keys]))

"""Seeded random substreams keyed by replicate coordinates."""

from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the coordinates ``key`` under ``seed``.

    Streams depend only on ``(seed, key)``, so replicates can be evaluated in
    any order (or in parallel) and still reproduce bit for bit.
    """
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(v) for v in key))
    )

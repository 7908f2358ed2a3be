"""Deterministic, purpose-keyed random streams.

Every random draw in the package comes from a stream keyed by
(master_seed, purpose, *entity indices). Streams are mutually independent,
so neither parallel execution nor entity iteration order can change any
draw, and a whole experiment is a pure function of its master seed.
"""

from __future__ import annotations

import numpy as np

# Fixed purpose ids; never renumber, or seeded results change.
_PURPOSES = {
    "model-init": 1,
    "user-weights": 2,
    "item-weights": 3,
    "noise-h": 4,
    "noise-c": 5,
    "split": 6,
    "kfold": 7,
    "subsample": 8,
    "pdp-sample": 9,
    "synthetic": 10,
    "check-noise": 11,
}


def stream(master_seed: int, purpose: str, *key: int) -> np.random.Generator:
    """Return the generator for (master_seed, purpose, *key).

    The same arguments always yield an identically-seeded PCG64 stream.
    """
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative, got {master_seed}")
    entropy = (master_seed, _PURPOSES[purpose], *key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

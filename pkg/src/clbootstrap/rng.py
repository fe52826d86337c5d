"""Seeding helpers.

All randomness flows through ``numpy.random.Generator(Philox)``, a counter-based
bit generator.  Independent streams are derived from a base seed by
``SeedSequence(base, spawn_key=key)``: the key (e.g. ``(cell, replicate,
purpose)``) is hashed into the entropy pool, so a replicate's stream depends
only on its key, never on scheduling order.
"""

from __future__ import annotations

import numpy as np

# purpose tags mixed into the spawn key
GRAPH = 0
SEEDS = 1
CHOICE = 2


def stream(base_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))


def make_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))

"""Seed derivation so every component gets its own reproducible stream."""

import zlib
from typing import Union

import numpy as np

SeedKey = Union[str, int]


def derive_seed(root_seed: int, *keys: SeedKey) -> int:
    """Derive a deterministic 32-bit subseed for a component.

    String keys are hashed with CRC32, integer keys (trial or fold
    indices) are used as-is.

    Args:
        root_seed: Seed of the whole command
        keys: Component names and indices, e.g. ("split", 3)

    Returns:
        Subseed in [0, 2**32)
    """
    entropy = [int(root_seed) & 0xFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode("utf-8")))
        else:
            entropy.append(int(key) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(root_seed: int, *keys: SeedKey) -> np.random.Generator:
    """Generator seeded from `derive_seed(root_seed, *keys)`."""
    return np.random.default_rng(derive_seed(root_seed, *keys))

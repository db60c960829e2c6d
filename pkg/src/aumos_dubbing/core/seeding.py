"""Named random substreams derived from one root seed.

Every source of randomness (data shuffling, duration noise, parameter
initialisation) draws from its own substream so that changing one consumer
never shifts the numbers another consumer sees.
"""

from __future__ import annotations

import hashlib

import numpy as np

DATA_SHUFFLE = "data-shuffle"
NOISE = "noise"
INIT = "init"


def stable_hash(text: str) -> int:
    """64-bit hash of a string that is stable across processes (unlike ``hash``)."""
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def derive_seed(root_seed: int, stream: str) -> int:
    """Seed of the named substream of ``root_seed``, in ``[0, 2**63)``."""
    return stable_hash(f"{root_seed}/{stream}") >> 1


def substream(root_seed: int, stream: str, *keys: int) -> np.random.Generator:
    """A numpy Generator for ``(root_seed, stream, *keys)``."""
    return np.random.default_rng([derive_seed(root_seed, stream), *keys])

"""
Project-wide pseudo-random substreams.

Every random draw in biasamp comes from a `numpy.random.Generator` backed by
the PCG64 bit generator, which produces the same sequence on every platform.
Generators are never shared: each operation derives its own substream seed by
hashing its name together with the caller's seed (and any further parts, such
as an epoch index), so trials and operations never draw from overlapping
streams and can run in any order.
"""

from __future__ import annotations

import hashlib
import json
from typing import Union

import numpy as np

__all__ = ("derive_seed", "rng_for")

SeedPart = Union[int, float, str, bool, None]


def derive_seed(name: str, *parts: SeedPart) -> int:
    """
    Derive a 64-bit substream seed from an operation name and seed parts.

    The seed is the first 8 bytes (big-endian) of the SHA-256 digest of the
    canonical JSON encoding of `[name, *parts]`.
    """
    payload = json.dumps([name, *parts], separators=(",", ":"), sort_keys=True)
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(name: str, *parts: SeedPart) -> np.random.Generator:
    """
    Return a fresh PCG64 generator for the substream `(name, *parts)`.
    """
    return np.random.Generator(np.random.PCG64(derive_seed(name, *parts)))

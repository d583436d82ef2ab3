"""Named, seeded random streams.

Every random draw in the package comes from ``stream(seed, name)``.  Streams
with different names are statistically independent and do not depend on the
order in which they are created, so Monte Carlo trials give the same counts
for any worker pool size.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "trial_stream", "as_generator"]


def _name_key(name: str) -> tuple[int, ...]:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the sub-stream ``name`` of the global ``seed``."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=_name_key(name))
    return np.random.Generator(np.random.PCG64(ss))


def trial_stream(seed: int, index: int, prefix: str = "init/trial") -> np.random.Generator:
    return stream(seed, f"{prefix}/{int(index)}")


def as_generator(seed: int, which) -> np.random.Generator:
    """Resolve ``which`` (generator, stream name or trial index) to a generator."""
    if isinstance(which, np.random.Generator):
        return which
    if isinstance(which, str):
        return stream(seed, which)
    return trial_stream(seed, which)

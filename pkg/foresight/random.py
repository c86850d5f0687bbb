"""Named deterministic random streams.

Every draw in the toolkit comes from a ``numpy.random.Generator`` backed by ``PCG64`` whose
``SeedSequence`` is keyed by the global seed plus a stream name, so the same
``(seed, name, ...)`` yields the same stream on every platform.
"""
import pickle
import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1
PICKLE_PROTOCOL = 4


def name_hash(name) -> int:
    """Platform-stable 32-bit adler32 of a pickled stream name (a string or a tuple of strings and ints)."""
    return zlib.adler32(pickle.dumps(name, protocol=PICKLE_PROTOCOL))


def stream_key(*names) -> tuple[int, ...]:
    key = []
    for name in names:
        if isinstance(name, (int, np.integer)):
            key.append(int(name) & SEED_MASK)
        else:
            key.append(name_hash(name))
    return tuple(key)


def generator(seed: int, *names) -> np.random.Generator:
    seed_sequence = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=stream_key(*names))
    return np.random.Generator(np.random.PCG64(seed_sequence))


__all__ = ["generator", "name_hash", "stream_key"]

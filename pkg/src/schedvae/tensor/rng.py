"""Named random sub-streams derived from one master seed.

Streams use the counter-based Philox bit generator, keyed by the master seed
and a stable hash of the stream name, so adding a stream never perturbs the
others.
"""

import zlib

import numpy as np

STREAMS = ("init", "dropout", "teacher", "latent", "shuffle", "oracle", "split", "eval")


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode()), *[int(e) for e in extra]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))

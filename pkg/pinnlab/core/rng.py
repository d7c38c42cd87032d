"""
Seeded random streams.

All randomness goes through PCG64 generators seeded with
``SeedSequence([seed, crc32(stream)])``. The stream name keeps draws made for
one purpose (say collocation points) unchanged when the counts requested for
another purpose change, and makes every point set reproducible from
(seed, stream) alone.
"""
import zlib

import numpy as np

from .exceptions import ConfigurationError


def seed_sequence(seed, stream):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ConfigurationError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.SeedSequence([int(seed), zlib.crc32(stream.encode('utf-8'))])


def seeded_generator(seed, stream):
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, stream)))


"""Reproducible random streams keyed by (seed, purpose tag).

Every random draw in the package goes through :func:`stream`, so two
problems built with the same seed but different purposes never share a
stream, and the same (seed, tag) pair yields the same numbers on every
platform (Philox is a counter-based generator).
"""

import hashlib

import numpy as np


def _tag_words(tag):
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def stream(seed, tag):
    """Return a ``numpy.random.Generator`` for ``(seed, tag)``."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence([int(seed)] + _tag_words(tag))
    return np.random.Generator(np.random.Philox(ss))

"""Deterministic random substream derivation.

Every randomized operation in the package draws from a generator keyed by
(master seed, purpose tag, index...).  Streams for different keys never
overlap, and a draw for one key does not depend on whether, or in which
order, draws for other keys happen.  That makes per-class and per-sample
work safe to parallelize without changing results.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1
_WORD = 1 << 32


def _key_words(tag) -> tuple[int, ...]:
    if isinstance(tag, str):
        return (zlib.crc32(tag.encode("utf-8")),)
    value = int(tag)
    if value < 0:
        raise ValueError(f"substream tags must be non-negative integers or strings, got {tag!r}")
    # split into uint32 words for SeedSequence's spawn key
    words = []
    while True:
        value, low = divmod(value, _WORD)
        words.append(low)
        if value == 0:
            return tuple(words)


def substream(seed: int, *tags) -> np.random.Generator:
    """Return a Generator for the substream keyed by ``(seed, *tags)``."""
    key: tuple[int, ...] = ()
    for tag in tags:
        key += _key_words(tag)
    seq = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=key)
    return np.random.default_rng(seq)


def child_seed(seed: int, *tags) -> int:
    """Derive a plain integer seed for APIs that take one."""
    return int(substream(seed, *tags).integers(0, _MASK64, dtype=np.uint64))

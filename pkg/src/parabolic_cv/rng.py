"""Keyed, counter-based random streams.

Every stream is a Philox generator whose key is derived from a root seed plus
a path of integer or string tags, e.g. ``stream(7, "coupled", 0)``.  Streams
with different keys are statistically independent, and a stream's output
does not depend on which other streams were created before it, so results
are reproducible regardless of execution order or worker count.

A *seed key* is either a plain ``int`` or a tuple ``(root, tag, ...)``;
:func:`child` extends a key with more tags.
"""

import zlib

import numpy as np

_TAG_CODES = {
    "cheap": 1,
    "coupled": 2,
    "standard": 3,
    "outer": 4,
    "strong": 5,
    "point": 6,
}


def _tag(tag):
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError(f"negative stream tag {tag}")
        return int(tag)
    if isinstance(tag, str):
        return _TAG_CODES.get(tag, zlib.crc32(tag.encode()) | (1 << 32))
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


def as_key(seed):
    """Normalise a seed or seed key to a tuple ``(root, tag_code, ...)``."""
    if isinstance(seed, tuple):
        if not seed:
            raise ValueError("empty seed key")
        return (int(seed[0]),) + tuple(_tag(t) for t in seed[1:])
    return (int(seed),)


def child(seed, *tags):
    """Return the seed key ``seed`` extended by ``tags``."""
    return as_key(seed) + tuple(_tag(t) for t in tags)


def stream(seed, *tags):
    """Philox generator for the key ``child(seed, *tags)``."""
    key = child(seed, *tags)
    ss = np.random.SeedSequence(key[0], spawn_key=key[1:])
    return np.random.Generator(np.random.Philox(ss))

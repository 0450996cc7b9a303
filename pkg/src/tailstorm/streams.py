"""Deterministic derivation of independent random streams.

A stream is identified by ``(seed, labels)``. Each label is mapped to a
32-bit word (non-negative ints below 2**32 map to themselves, anything else
to the first four bytes, little endian, of its BLAKE2b digest of ``str(label)``).
The words form the ``spawn_key`` of a ``numpy.random.SeedSequence`` with
``entropy=seed`` and the stream is a ``PCG64`` generator seeded from it.
Any implementation using the same recipe reproduces the draws exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np


def label_word(label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool) and 0 <= label < 2**32:
        return int(label)
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def derive_stream(seed: int, *labels) -> np.random.Generator:
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(label_word(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))

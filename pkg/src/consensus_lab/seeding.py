"""Deterministic RNG stream derivation from a single 64-bit master seed.

Every random draw in the package flows through :func:`substream`, so any
artifact is reproducible from its master seed plus the stream labels that
appear in run reports.
"""
from __future__ import annotations

import zlib

import numpy as np

SCHEME = "numpy-seedsequence-crc32"

_U64 = (1 << 64) - 1
_U32 = (1 << 32) - 1


def stream_key(label: str, *indices: int) -> tuple[int, ...]:
    """Spawn key for a named stream: crc32 of the label, then the indices."""
    return (zlib.crc32(label.encode("ascii")),) + tuple(int(i) & _U32 for i in indices)


def substream(seed: int, label: str, *indices: int) -> np.random.Generator:
    """Independent generator for ``(seed, label, *indices)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _U64, spawn_key=stream_key(label, *indices))
    return np.random.default_rng(ss)

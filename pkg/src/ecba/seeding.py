"""Deterministic randomness: portable counter-based streams and a seed tree.

Every random draw in the package flows through Philox4x64 keyed by a 64-bit
seed, so results are bit-identical across platforms, processes, and worker
counts. Pipeline stages and per-realization workers never share a stream:
each derives its own child seed from (parent seed, label) via SHA-256.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int) -> np.random.Generator:
    """Return the portable generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def child_seed(seed: int, label: str) -> int:
    """Derive the 64-bit child seed for a stage or worker label."""
    material = label.encode() + (seed & _MASK64).to_bytes(8, "little")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "little")


def substream(seed: int, label: str) -> np.random.Generator:
    """Generator for ``child_seed(seed, label)``."""
    return stream(child_seed(seed, label))

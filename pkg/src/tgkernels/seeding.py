"""Deterministic RNG derivation.

All randomness in the toolkit flows from a single user-supplied integer
seed.  Independent streams are derived by spawning a ``SeedSequence`` with
a structured spawn key, e.g. ``derive_rng(seed, stage, index)``; the same
(seed, path) pair always yields an identical generator, regardless of how
many other streams were derived.

Stage tags used by the pipeline: 0 generator, 1 task-1 simulation,
2 task-2 simulation, 3 label resets, 4 walk sampling, 5 cross-validation
folds.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, path)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def file_digest(data: bytes) -> str:
    """Hex digest used by pipeline manifests."""
    return hashlib.sha256(data).hexdigest()

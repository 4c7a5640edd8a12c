"""Deterministic seed derivation shared by every stochastic component."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base: int, *parts: int | str) -> int:
    """Stable 32-bit child seed from a base seed plus tags.

    Uses a cryptographic digest so derived streams for different tags are
    independent and identical across processes and platforms.
    """
    h = hashlib.sha256()
    h.update(str(int(base)).encode())
    for p in parts:
        h.update(b"|")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:4], "big")


def rng_for(base: int, *parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, *parts))

"""Deterministic per-stream seed derivation.

Every random stream in the package is derived from one master seed and a
stable text label via a splitmix64 finalizer over ``seed XOR blake2b(label)``.
Adding a new labelled stream never reshuffles existing ones.
"""

from __future__ import annotations

import hashlib

_MASK = 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, label: str) -> int:
    """Derive a 64-bit stream seed from a master seed and a label."""
    tag = int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "big")
    x = ((seed & _MASK) ^ tag) & _MASK
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK

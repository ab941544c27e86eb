"""Counter-based random streams keyed by (seed, tag, level, start, counter).

Every random decision of the sampler is a pure function of its key, so a tree
comes out identical whatever order (or process) its nodes are expanded in.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

TAG_KEEP = 1
TAG_PRECISION = 2
TAG_RECONSTRUCT = 3


def _mix(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def _fold(acc: np.ndarray, part) -> np.ndarray:
    part = np.asarray(part).astype(np.int64).astype(np.uint64)
    return _mix(acc ^ (part + _GOLDEN))


def hash_key(seed: int, *parts) -> np.ndarray:
    """64-bit hashes of ``(seed, *parts)``; parts broadcast like numpy arrays."""
    with np.errstate(over="ignore"):
        acc = _mix(np.asarray([seed & _MASK], dtype=np.uint64))
        for part in parts:
            acc = _fold(acc, part)
    return acc


def uniforms(seed: int, *parts) -> np.ndarray:
    """Uniform doubles in ``[0, 1)``, one per broadcast key."""
    return (hash_key(seed, *parts) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def node_generator(seed: int, tag: int, level: int, start: int) -> np.random.Generator:
    """A full numpy generator private to one node."""
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK, tag, level, start]))

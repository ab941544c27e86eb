"""The b-ary block tree and the exact tree distance over it.

A node ``(level, start)`` covers ``x[start:start + n // b**level]``.  Its
distance to a target position ``u`` of ``y`` sums, over its ``b`` children, the
child's distance to ``u + j*len + r`` plus the displacement ``|r|``, minimised
over ``r``; a leaf costs 1 unless ``y[u]`` exists and equals its symbol.

All positions are 0-based here: the root is ``(0, 0)`` matched to ``u = 0``.
Distance vectors are kept for every ``u`` in ``[-n, 2n)``; a block placed
entirely outside that window costs its full length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np

from .text import Text, TextLike, as_text, compact_pair

NodeId = Tuple[int, int]
ZVector = Dict[NodeId, int]


def ilog(n: int, b: int) -> int | None:
    """``h`` with ``b**h == n``, or None."""
    h, p = 0, 1
    while p < n:
        p *= b
        h += 1
    return h if p == n else None


@dataclass(frozen=True)
class TreeParams:
    """Tunables of the decomposition and of the sampler built on it.

    ``c_p`` stands in for the polylog multiplier of the subsampling rate and
    ``zeta`` for the concentration constant; both are exposed because their
    absolute values are not pinned down by the analysis.
    """

    n: int
    b: int
    beta: float = 2.0
    eps: float | None = None
    c_p: float = 1.0
    zeta: float = 1.0
    seed: int = 0
    root_factor: float = 1.0
    delta: float | None = None
    delta_first: float | None = None
    prune: bool = True
    h: int = field(init=False)

    def __post_init__(self):
        if self.b < 2:
            raise ValueError("arity b must be at least 2")
        h = ilog(self.n, self.b)
        if h is None:
            raise ValueError(f"n={self.n} is not a power of b={self.b}")
        object.__setattr__(self, "h", h)
        if self.beta < 2:
            raise ValueError("beta must be at least 2")
        if self.c_p <= 0 or self.zeta <= 0:
            raise ValueError("c_p and zeta must be positive")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def log_n(self) -> float:
        return max(math.log2(self.n), 1.0)

    @property
    def level_eps(self) -> float:
        return self.eps if self.eps is not None else 1.0 / self.log_n

    @property
    def level_delta(self) -> float:
        return self.delta if self.delta is not None else float(self.n) ** -3

    def block_len(self, level: int) -> int:
        return self.n // self.b ** level

    def with_(self, **changes) -> "TreeParams":
        return replace(self, **changes)

    @classmethod
    def for_length(cls, length: int, b: int, **kw) -> "TreeParams":
        return cls(n=next_power(length, b), b=b, **kw)

    @classmethod
    def few_levels(cls, n: int, t: int, beta: float = 2.0, **kw) -> "TreeParams":
        """Preset with ``b = n**(1/t)`` and a loose first-level failure probability."""
        b = round(n ** (1.0 / t))
        if b ** t != n:
            raise ValueError(f"n={n} is not a perfect {t}-th power")
        return cls(n=n, b=b, beta=beta, delta_first=0.1, **kw)


def next_power(length: int, b: int) -> int:
    n = 1
    while n < max(length, 1):
        n *= b
    return n


def pad_to_power(x: TextLike, b: int, n: int | None = None) -> tuple[Text, int, int]:
    """Append a fresh sentinel symbol until the length is a power of ``b``.

    The sentinel has code ``alphabet_size`` and the alphabet grows by one.
    Returns ``(padded, n, h)``.
    """
    if b < 2:
        raise ValueError("b must be at least 2")
    t = as_text(x)
    if len(t) < 1:
        raise ValueError("cannot pad an empty text")
    n = next_power(len(t), b) if n is None else n
    h = ilog(n, b)
    if h is None or n < len(t):
        raise ValueError(f"target length {n} is not a power of {b} >= |x|")
    sentinel = t.alphabet_size
    sym = np.concatenate([t.symbols, np.full(n - len(t), sentinel, dtype=np.int64)])
    return Text(sym, t.alphabet_size + 1), n, h


def pad_pair(x: TextLike, y: TextLike, b: int) -> tuple[Text, Text, int, int]:
    """Pad both strings to the same power of ``b`` with a shared sentinel."""
    tx, ty = as_text(x), as_text(y)
    sigma = max(tx.alphabet_size, ty.alphabet_size)
    n = next_power(max(len(tx), len(ty)), b)
    px, _, h = pad_to_power(Text(tx.symbols, sigma), b, n)
    py, _, _ = pad_to_power(Text(ty.symbols, sigma), b, n)
    return px, py, n, h


def distance_transform(f, window: int | None = None) -> np.ndarray:
    """``g[u] = min_{|r| <= window} f[u + r] + |r|`` along the last axis.

    Positions outside the array count as +inf.  Without a window (or with one
    covering the whole array) this is two prefix-min passes over
    ``f[v] - v`` and ``f[v] + v``; otherwise both one-sided minima use a
    linear-time sliding-window minimum.
    """
    f = np.asarray(f)
    work = f.astype(np.float64) if f.dtype.kind not in "fi" else f
    size = work.shape[-1]
    if size == 0:
        return work.copy()
    idx = np.arange(size, dtype=work.dtype if work.dtype.kind == "f" else np.int64)
    if window is None or window >= size - 1:
        left = np.minimum.accumulate(work - idx, axis=-1) + idx
        right = np.flip(np.minimum.accumulate(np.flip(work + idx, -1), axis=-1), -1) - idx
        return np.minimum(left, right)
    if window < 0:
        raise ValueError("window must be non-negative")
    from scipy.ndimage import minimum_filter1d

    big = np.inf if work.dtype.kind == "f" else np.iinfo(np.int64).max // 4
    w = int(window)
    # origins place the (w+1)-window at [u-w, u] and at [u, u+w]
    left = minimum_filter1d(work - idx, size=w + 1, axis=-1, mode="constant",
                            cval=big, origin=w // 2) + idx
    right = minimum_filter1d(work + idx, size=w + 1, axis=-1, mode="constant",
                             cval=big, origin=-((w + 1) // 2)) - idx
    return np.minimum(left, right)


def _shift_sum(g: np.ndarray, b: int, child_len: int, n: int) -> np.ndarray:
    """Parent vectors from child transforms: ``sum_j g[p*b+j, k + j*child_len]``."""
    parents = g.shape[0] // b
    width = 3 * n
    padded = np.full((g.shape[0], width + n), child_len, dtype=g.dtype)
    padded[:, :width] = g
    padded = padded.reshape(parents, b, width + n)
    out = np.zeros((parents, width), dtype=g.dtype)
    for j in range(b):
        off = j * child_len
        out += padded[:, j, off: off + width]
    return out


def _check_pair(x: TextLike, y: TextLike, params: "TreeParams | int"):
    cx, cy, sigma = compact_pair(x, y)
    if cx.size != cy.size:
        raise ValueError(f"length mismatch: |x|={cx.size}, |y|={cy.size}")
    if isinstance(params, TreeParams):
        n, b = params.n, params.b
    else:
        n, b = cx.size, int(params)
    if ilog(n, b) is None:
        raise ValueError(f"length {n} is not a power of b={b}; pad first")
    if cx.size != n:
        raise ValueError(f"length {cx.size} differs from the tree size {n}")
    return cx, cy, sigma, n, b, ilog(n, b)


def _leaf_vectors(cx: np.ndarray, cy: np.ndarray, n: int):
    """Per-symbol leaf cost over the window, for symbols present in ``x``."""
    syms, inv = np.unique(cx, return_inverse=True)
    leaf = np.ones((syms.size, 3 * n), dtype=np.int32)
    leaf[:, n: 2 * n] = cy[None, :] != syms[:, None]
    return leaf, inv


def _level_vectors(x: TextLike, y: TextLike, params, keep: bool = False):
    cx, cy, _, n, b, h = _check_pair(x, y, params)
    leaf, inv = _leaf_vectors(cx, cy, n)
    kept = {}
    if h == 0:
        return leaf[inv], kept, n, b, h
    g_leaf = distance_transform(leaf)
    if keep:
        kept[h] = leaf[inv]
    # level h-1 from symbol-shared leaf transforms
    padded = np.full((g_leaf.shape[0], 4 * n), 1, dtype=np.int32)
    padded[:, : 3 * n] = g_leaf
    groups = inv.reshape(n // b, b)
    cur = np.zeros((n // b, 3 * n), dtype=np.int32)
    for j in range(b):
        cur += padded[groups[:, j], j: j + 3 * n]
    for level in range(h - 1, 0, -1):
        if keep:
            kept[level] = cur
        g = distance_transform(cur)
        cur = _shift_sum(g, b, n // b ** level, n)
    return cur, kept, n, b, h


def exact_e_distance(x: TextLike, y: TextLike, params: "TreeParams | int") -> int:
    """Exact tree distance from ``x`` to ``y`` (root matched at position 0).

    ``params`` is a :class:`TreeParams` or just the arity ``b``; ``|x| = |y|``
    must be a power of ``b``.  Time is ``O(h n^2)`` with small constants.
    """
    root, _, n, _, _ = _level_vectors(x, y, params)
    return int(root[0, n])


def optimal_z(x: TextLike, y: TextLike, params: "TreeParams | int") -> ZVector:
    """A minimising placement vector, traced top-down (quadratic memory).

    Ties prefer the smallest ``|r|``, then the negative shift.
    """
    root, kept, n, b, h = _level_vectors(x, y, params, keep=True)
    kept[0] = root
    z: ZVector = {(0, 0): 0}
    if h == 0:
        return z
    for level in range(h):
        child_len = n // b ** (level + 1)
        vec = kept[level + 1]
        for (lv, start), u in list(z.items()):
            if lv != level:
                continue
            for j in range(b):
                child_start = start + j * child_len
                row = vec[child_start // child_len]
                base = u + j * child_len
                best, best_r = None, 0
                for mag in range(0, n + 1):
                    for r in ((0,) if mag == 0 else (-mag, mag)):
                        k = base + r + n
                        val = row[k] if 0 <= k < 3 * n else child_len
                        cost = int(val) + mag
                        if best is None or cost < best:
                            best, best_r = cost, r
                    if best is not None and best <= mag:
                        break
                z[(level + 1, child_start)] = base + best_r
    return z


def zvector_cost(z: ZVector, params: "TreeParams | int", n: int | None = None) -> int:
    """Total displacement ``sum |z_parent + j*len - z_child|`` over the tree."""
    if isinstance(params, TreeParams):
        n, b, h = params.n, params.b, params.h
    else:
        b = int(params)
        h = ilog(n, b)
    total = 0
    for level in range(h):
        parent_len = n // b ** level
        child_len = parent_len // b
        for start in range(0, n, parent_len):
            zp = z[(level, start)]
            for j in range(b):
                total += abs(zp + j * child_len - z[(level + 1, start + j * child_len)])
    return total


def e_from_Z(x: TextLike, y: TextLike, z: ZVector, params: "TreeParams | int") -> int:
    """Cost of an explicit placement: displacements plus leaf mismatches."""
    cx, cy, _, n, b, h = _check_pair(x, y, params)
    if z.get((0, 0)) != 0:
        raise ValueError("the root must be placed at position 0")
    for level in range(h + 1):
        step = n // b ** level
        for start in range(0, n, step):
            if (level, start) not in z:
                raise ValueError(f"placement vector misses node {(level, start)}")
    ham = 0
    for s in range(n):
        u = z[(h, s)]
        ham += int(not (0 <= u < n) or cx[s] != cy[u])
    return zvector_cost(z, b, n) + ham

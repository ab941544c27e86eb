"""Exact edit distance, indel distance, LCS and alignments.

These are the ground-truth oracles for everything else in the package.  The
dynamic programs keep two rows only; each row is computed with a single
prefix-min (or prefix-max) scan, which is what makes n in the thousands cheap.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .text import TextLike, compact_pair

Alignment = List[Tuple[int, int]]

_NEG = np.int64(-(1 << 40))


def _rows_cols(x: TextLike, y: TextLike):
    cx, cy, _ = compact_pair(x, y)
    # iterate over the longer string so the rolling row is the shorter one
    if cx.size < cy.size:
        return cy, cx
    return cx, cy


def ed(x: TextLike, y: TextLike) -> int:
    """Levenshtein distance (unit-cost insertions, deletions, substitutions)."""
    rows, cols = _rows_cols(x, y)
    m = cols.size
    if m == 0:
        return int(rows.size)
    ramp = np.arange(m + 1, dtype=np.int64)
    prev = ramp.copy()
    cand = np.empty(m + 1, dtype=np.int64)
    for i, c in enumerate(rows, start=1):
        cand[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (cols != c), out=cand[1:])
        cand -= ramp
        np.minimum.accumulate(cand, out=prev)
        prev += ramp
    return int(prev[m])


def lcs(x: TextLike, y: TextLike) -> int:
    """Length of a longest common subsequence."""
    rows, cols = _rows_cols(x, y)
    m = cols.size
    if m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cand = np.zeros(m + 1, dtype=np.int64)
    for c in rows:
        np.maximum(prev[1:], prev[:-1] + (cols == c), out=cand[1:])
        np.maximum.accumulate(cand, out=prev)
    return int(prev[m])


def edd(x: TextLike, y: TextLike) -> int:
    """Indel distance by its own DP (no substitutions); equals ``|x|+|y|-2 lcs``."""
    rows, cols = _rows_cols(x, y)
    m = cols.size
    if m == 0:
        return int(rows.size)
    big = np.int64(1 << 40)
    ramp = np.arange(m + 1, dtype=np.int64)
    prev = ramp.copy()
    cand = np.empty(m + 1, dtype=np.int64)
    for i, c in enumerate(rows, start=1):
        cand[0] = i
        np.minimum(prev[1:] + 1, np.where(cols == c, prev[:-1], big), out=cand[1:])
        cand -= ramp
        np.minimum.accumulate(cand, out=prev)
        prev += ramp
    return int(prev[m])


def lcs_table(x: TextLike, y: TextLike) -> np.ndarray:
    """Full ``(|x|+1) x (|y|+1)`` LCS table; quadratic memory."""
    cx, cy, _ = compact_pair(x, y)
    n, m = cx.size, cy.size
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    cand = np.zeros(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        prev = table[i - 1]
        np.maximum(prev[1:], prev[:-1] + (cy == cx[i - 1]), out=cand[1:])
        np.maximum.accumulate(cand, out=table[i])
    return table


def extract_alignment(x: TextLike, y: TextLike) -> Alignment:
    """A maximum alignment as increasing ``(i, j)`` pairs with ``x[i] == y[j]``.

    Traceback preference: match, then deletion from ``x``, then insertion.
    """
    cx, cy, _ = compact_pair(x, y)
    table = lcs_table(cx, cy)
    i, j = cx.size, cy.size
    pairs: Alignment = []
    while i > 0 and j > 0:
        if cx[i - 1] == cy[j - 1] and table[i, j] == table[i - 1, j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif table[i - 1, j] == table[i, j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def is_alignment(x: TextLike, y: TextLike, pairs: Alignment) -> bool:
    cx, cy, _ = compact_pair(x, y)
    last_i = last_j = -1
    for i, j in pairs:
        if not (last_i < i < cx.size and last_j < j < cy.size):
            return False
        if cx[i] != cy[j]:
            return False
        last_i, last_j = i, j
    return True


# -- banded indel distance -----------------------------------------------------


def lcs_banded(x: TextLike, y: TextLike, band: int) -> int:
    """LCS restricted to cells with ``|i - j| <= band``; a lower bound on lcs.

    Requires ``band >= ||x| - |y||``.
    """
    cx, cy, _ = compact_pair(x, y)
    n, m = cx.size, cy.size
    if band < abs(n - m):
        raise ValueError("band narrower than the length difference")
    width = 2 * band + 1
    offs = np.arange(width, dtype=np.int64) - band  # j - i for each band slot
    prev = np.where((offs >= 0) & (offs <= m), 0, _NEG).astype(np.int64)
    cand = np.empty(width, dtype=np.int64)
    ypad = np.concatenate([cy, [-1]])
    for i in range(1, n + 1):
        cols = i + offs
        valid = (cols >= 0) & (cols <= m)
        ych = ypad[np.clip(cols - 1, 0, m)]
        diag = prev + ((ych == cx[i - 1]) & (cols >= 1))
        cand[:-1] = np.maximum(prev[1:], diag[:-1])
        cand[-1] = diag[-1]
        cand[cols == 0] = 0
        cand[~valid] = _NEG
        np.maximum.accumulate(cand, out=prev)
        prev[cols > m] = _NEG
    return int(prev[m - n + band])


def edd_banded(x: TextLike, y: TextLike, band: int) -> int:
    cx, cy, _ = compact_pair(x, y)
    return int(cx.size + cy.size - 2 * lcs_banded(cx, cy, band))


def edd_certified(x: TextLike, y: TextLike, band: int = 16) -> tuple[int, int]:
    """Exact indel distance by band doubling; returns ``(distance, band)``.

    A path of cost ``d`` never strays more than ``(d + |n-m|)/2`` from the main
    diagonal, so a banded value satisfying that bound is exact.
    """
    cx, cy, _ = compact_pair(x, y)
    n, m = cx.size, cy.size
    band = max(band, abs(n - m), 1)
    while True:
        d = edd_banded(cx, cy, band)
        if 2 * band >= d + abs(n - m) or band >= max(n, m):
            return d, band
        band *= 2

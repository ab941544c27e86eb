"""Workload families shared by the bench harness and the test suite."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .hard import HardInstanceParams, cyclic_shift, gen_hard_pair
from .text import Text

FAMILIES = ("random", "random-edits", "rotations", "hard-pairs")


def random_edits(x: Text, k: int, rng: np.random.Generator) -> Text:
    """Apply ``k`` random substitutions, insertions or deletions, keeping the length.

    Every insertion is paired with a deletion elsewhere so the result has
    ``|x|`` symbols; ``ed(x, result) <= 2k``.
    """
    s = list(x.symbols.tolist())
    sigma = x.alphabet_size
    for _ in range(k):
        op = rng.integers(3)
        if op == 0:
            i = int(rng.integers(len(s)))
            s[i] = int(rng.integers(sigma))
        else:
            i = int(rng.integers(len(s) + 1))
            s.insert(i, int(rng.integers(sigma)))
            del s[int(rng.integers(len(s)))]
    return Text(np.array(s, dtype=np.int64), sigma)


def make_pair(family: str, n: int, rng: np.random.Generator, sigma: int = 4) -> Tuple[Text, Text]:
    if family == "random":
        return Text.random(n, sigma, rng), Text.random(n, sigma, rng)
    if family == "random-edits":
        x = Text.random(n, sigma, rng)
        k = int(rng.integers(1, max(2, n // 8)))
        return x, random_edits(x, k, rng)
    if family == "rotations":
        x = Text.random(n, sigma, rng)
        return x, cyclic_shift(x, int(rng.integers(1, max(2, n // 8))))
    if family == "hard-pairs":
        params = HardInstanceParams.desk(seed=int(rng.integers(1 << 31)))
        which = "same" if rng.random() < 0.5 else "cross"
        x, y = gen_hard_pair(params, which, rng)
        return Text(x.symbols[:n], 2), Text(y.symbols[:n], 2)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")

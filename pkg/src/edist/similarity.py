"""Exact similarity of small explicit string distributions.

A distribution is given by its support.  Projections, pointwise similarity,
uniform similarity over all index subsets, substitution products of
distributions and the best adaptive ``q``-query distinguisher are all
computed by enumeration, so everything here is exact but only for tiny ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .hard import cyclic_shift
from .text import TextLike, codes

Pmf = Dict[Tuple[int, ...], float]

MAX_SUBSET_N = 16
MAX_TREE_STATES = 10 ** 7


@dataclass
class ExplicitDist:
    """Support strings as rows of ``support`` with probabilities ``probs``."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        pr = np.asarray(self.probs, dtype=np.float64)
        if sup.ndim != 2 or sup.shape[0] != pr.size or pr.size == 0:
            raise ValueError("support must be a non-empty (m, n) array with m probabilities")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        uniq, inv = np.unique(sup, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inv.ravel(), pr)
        self.support, self.probs = uniq, merged

    @property
    def n(self) -> int:
        return int(self.support.shape[1])

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[TextLike, float]]) -> "ExplicitDist":
        rows = [codes(t) for t, _ in pairs]
        if len({r.size for r in rows}) != 1:
            raise ValueError("all support strings must have the same length")
        return cls(np.stack(rows), np.array([p for _, p in pairs], dtype=np.float64))

    @classmethod
    def point(cls, x: TextLike) -> "ExplicitDist":
        return cls(codes(x)[None, :], np.ones(1))

    @classmethod
    def uniform(cls, n: int, sigma: int) -> "ExplicitDist":
        sup = np.array(list(product(range(sigma), repeat=n)), dtype=np.int64).reshape(-1, n)
        return cls(sup, np.full(sup.shape[0], 1.0 / sup.shape[0]))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(self.probs.size, size=size, p=self.probs)
        return self.support[idx]


def shift_distribution(x: TextLike, s: int) -> ExplicitDist:
    """Rotation of ``x`` by an offset uniform in ``[1, s]``."""
    rows = np.stack([cyclic_shift(x, r).symbols for r in range(1, s + 1)])
    return ExplicitDist(rows, np.full(s, 1.0 / s))


def product_distribution(mother: ExplicitDist, family: Mapping[int, ExplicitDist]) -> ExplicitDist:
    """Substitution product: every mother symbol replaced by an independent block draw."""
    rows, probs = [], []
    for m_row, m_p in zip(mother.support, mother.probs):
        if m_p == 0:
            continue
        parts = [family[int(c)] for c in m_row]
        for choice in product(*[range(d.probs.size) for d in parts]):
            p = m_p * math.prod(d.probs[i] for d, i in zip(parts, choice))
            rows.append(np.concatenate([d.support[i] for d, i in zip(parts, choice)]))
            probs.append(p)
    pr = np.array(probs)
    return ExplicitDist(np.stack(rows), pr / pr.sum())


def projected_pmf(d: ExplicitDist, Q: Sequence[int]) -> Pmf:
    """Marginal on coordinates ``Q`` (in the given order)."""
    Q = list(Q)
    if any(not 0 <= q < d.n for q in Q):
        raise IndexError(f"projection indices must lie in [0, {d.n})")
    out: Pmf = {}
    cols = d.support[:, Q] if Q else np.zeros((d.probs.size, 0), dtype=np.int64)
    for row, p in zip(map(tuple, cols.tolist()), d.probs.tolist()):
        out[row] = out.get(row, 0.0) + p
    return out


def similarity_alpha(pmfs: Sequence[Pmf]) -> float:
    """Least ``alpha`` with ``(1 - alpha) * max_i p_i(w) <= min_i p_i(w)`` for all ``w``."""
    if not pmfs:
        raise ValueError("need at least one pmf")
    keys = set().union(*pmfs)
    worst = 0.0
    for key in keys:
        vals = [pm.get(key, 0.0) for pm in pmfs]
        hi = max(vals)
        if hi > 0:
            worst = max(worst, 1.0 - min(vals) / hi)
    return worst


def _check_common(dists: Sequence[ExplicitDist]) -> int:
    if not dists:
        raise ValueError("need at least one distribution")
    n = dists[0].n
    if any(d.n != n for d in dists):
        raise ValueError("distributions must share the string length")
    return n


def uniform_similarity(dists: Sequence[ExplicitDist]) -> float:
    """``max`` over nonempty ``Q`` of ``similarity_alpha(projections to Q) / |Q|``."""
    n = _check_common(dists)
    if n > MAX_SUBSET_N:
        raise ValueError(f"n={n} too large for subset enumeration (limit {MAX_SUBSET_N})")
    best = 0.0
    for size in range(1, n + 1):
        for Q in combinations(range(n), size):
            a = similarity_alpha([projected_pmf(d, Q) for d in dists])
            best = max(best, a / size)
    return best


def rotation_similarity_bound(sigma: int, s: int, n: int) -> float:
    """``1/A`` with ``A = max(log_sigma(s / (400 ln n))**(1/6), 1)``."""
    arg = s / (400.0 * math.log(n))
    A = 1.0
    if arg > 1:
        A = max(math.log(arg, sigma) ** (1.0 / 6.0), 1.0)
    return 1.0 / A


# -- optimal distinguisher -------------------------------------------------------


@dataclass
class DecisionTree:
    """Either a leaf with an output bit or a query position with children per symbol."""

    output: int | None = None
    position: int | None = None
    children: Dict[int, "DecisionTree"] | None = None

    def run(self, s: np.ndarray) -> int:
        node = self
        while node.output is None:
            node = node.children[int(s[node.position])]
        return node.output

    def run_many(self, rows: np.ndarray) -> np.ndarray:
        return np.array([self.run(r) for r in rows], dtype=np.int64)


def optimal_tree(d0: ExplicitDist, d1: ExplicitDist, q: int) -> Tuple[DecisionTree, float, float]:
    """Adaptive ``q``-query tree maximising ``p0 + p1``; returns ``(tree, p0, p1)``.

    ``p_j`` is the exact probability of answering ``j`` on inputs from ``d_j``.
    """
    n = _check_common([d0, d1])
    if q > n:
        raise ValueError("q must not exceed n")
    alphabet = sorted(set(np.unique(d0.support).tolist()) | set(np.unique(d1.support).tolist()))
    if (len(alphabet) * n) ** q > MAX_TREE_STATES:
        raise ValueError("instance too large for exhaustive tree search")

    def mass(d: ExplicitDist, state) -> float:
        mask = np.ones(d.probs.size, dtype=bool)
        for pos, sym in state:
            mask &= d.support[:, pos] == sym
        return float(d.probs[mask].sum())

    @lru_cache(maxsize=None)
    def best(state: frozenset) -> Tuple[float, str, int]:
        """``(value, kind, arg)``: stop with output ``arg`` or ask position ``arg``."""
        m0, m1 = mass(d0, state), mass(d1, state)
        value, kind, arg = max(m0, m1), "leaf", (0 if m0 >= m1 else 1)
        if len(state) < q and m0 + m1 > 0:
            asked = {pos for pos, _ in state}
            for pos in range(n):
                if pos in asked:
                    continue
                total = sum(best(state | {(pos, c)})[0] for c in alphabet)
                if total > value + 1e-15:
                    value, kind, arg = total, "ask", pos
        return value, kind, arg

    def build(state: frozenset) -> DecisionTree:
        _, kind, arg = best(state)
        if kind == "leaf":
            return DecisionTree(output=arg)
        return DecisionTree(position=arg,
                            children={c: build(state | {(arg, c)}) for c in alphabet})

    tree = build(frozenset())
    p0 = _accept(tree, d0, 0)
    p1 = _accept(tree, d1, 1)
    return tree, p0, p1


def _accept(tree: DecisionTree, d: ExplicitDist, bit: int) -> float:
    return float(d.probs[tree.run_many(d.support) == bit].sum())


def distinguisher_experiment(d0: ExplicitDist, d1: ExplicitDist, q: int, trials: int,
                             rng: np.random.Generator):
    """Empirical success rates ``(p0, p1)`` of the optimal tree over ``trials`` draws each.

    Returns ``(p0_hat, p1_hat, p0_exact, p1_exact, mu)``.
    """
    tree, p0, p1 = optimal_tree(d0, d1, q)
    s0 = d0.sample(rng, trials)
    s1 = d1.sample(rng, trials)
    p0_hat = float(np.mean(tree.run_many(s0) == 0)) if trials else 0.0
    p1_hat = float(np.mean(tree.run_many(s1) == 1)) if trials else 0.0
    mu = uniform_similarity([d0, d1])
    return p0_hat, p1_hat, p0, p1, mu

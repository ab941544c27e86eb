"""Content-oblivious construction of the pruned sample tree.

Each node carries a precision ``w``.  A node at level ``i`` turns ``w`` into a
rate ``p = (w / b) * c_p * log2(n)**3``; with ``p >= 1`` all ``b`` children are
kept and inherit precision ``p``, otherwise each child survives independently
with probability ``p`` and gets a fresh precision from the heavy-tailed
distribution W.  Only the parameters are consulted, never the strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from . import _rng
from .etree import TreeParams


@dataclass(frozen=True)
class PrecisionDist:
    """W: the maximum of ``k`` i.i.d. copies of density ``nu / x**2`` on ``[1, N**3]``."""

    N: float
    k: int
    nu: float
    rho: float
    eps: float
    delta: float
    zeta: float = 1.0

    @classmethod
    def make(cls, N: float, rho: float, eps: float, delta: float, zeta: float = 1.0):
        if N < 1 or rho <= 0 or eps <= 0 or not 0 < delta < 1 or zeta <= 0:
            raise ValueError("invalid precision distribution parameters")
        k = math.ceil((2.0 * zeta / rho) * math.log2(1.0 / delta) / (eps / 2.0) ** 3)
        cube_inv = float(N) ** -3
        nu = 1.0 / (1.0 - cube_inv) if cube_inv < 1 else math.inf
        return cls(float(N), max(int(k), 1), nu, float(rho), float(eps), float(delta), float(zeta))

    @classmethod
    def for_tree(cls, params: TreeParams, first_level: bool = False) -> "PrecisionDist":
        delta = params.level_delta
        if first_level and params.delta_first is not None:
            delta = params.delta_first
        return cls.make(params.n, 1.0, params.level_eps, delta, params.zeta)

    @property
    def top(self) -> float:
        return self.N ** 3

    @property
    def t(self) -> float:
        """Reconstruction threshold ``3 / eps``."""
        return 3.0 / self.eps

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=np.float64), 1.0, self.top)
        return np.minimum(self.nu * (1.0 - 1.0 / x), 1.0) ** self.k

    def inverse(self, u) -> np.ndarray:
        """Inverse CDF of W: ``1 / (1 - u**(1/k) / nu)`` clamped to the support."""
        u = np.asarray(u, dtype=np.float64)
        with np.errstate(divide="ignore"):
            a = np.log(u) / self.k
        root = np.exp(a)
        denom = -np.expm1(a) + root * self.N ** -3
        with np.errstate(divide="ignore"):
            x = 1.0 / denom
        return np.clip(x, 1.0, self.top)

    def sample(self, rng: np.random.Generator, size=None):
        return self.inverse(rng.random(size))

    def mean_single(self) -> float:
        """Exact mean of one copy: ``nu * ln(N**3)``."""
        return self.nu * 3.0 * math.log(self.N)

    def mean(self) -> float:
        """Exact ``E[w] = 1 + int_1^{N^3} (1 - F(x)) dx``, integrated over ``ln x``."""
        from scipy.integrate import quad

        log_nu = math.log(self.nu)
        k = self.k

        def tail(s: float) -> float:
            log_f = k * (log_nu + math.log1p(-math.exp(-s))) if s > 0 else -math.inf
            return -math.expm1(min(log_f, 0.0)) * math.exp(s)

        top = 3.0 * math.log(self.N)
        peak = min(max(math.log(k), 0.0), top)
        pieces = sorted({0.0, peak, min(peak + 5.0, top), top})
        total = 0.0
        for lo, hi in zip(pieces, pieces[1:]):
            if hi > lo:
                total += quad(tail, lo, hi, limit=200, epsrel=1e-10)[0]
        return 1.0 + total

    def expected_bound(self) -> float:
        """``(1/rho) * eps**-3 * log2(1/delta) * log2(N)``, the shape of the mean bound."""
        return (1.0 / self.rho) * self.eps ** -3 * math.log2(1.0 / self.delta) * math.log2(self.N)


def sample_precision(dist: PrecisionDist, rng: np.random.Generator, size=None):
    """Exact draws from W by inverse CDF; a scalar when ``size`` is None."""
    x = dist.sample(rng, size)
    return float(x) if size is None else x


def truncated_single(u, w) -> np.ndarray:
    """Single copies conditioned on ``x <= w``, by inverse CDF."""
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    return 1.0 / (1.0 - u * (1.0 - 1.0 / w))


# -- the tree -----------------------------------------------------------------


@dataclass
class Level:
    """Nodes of one level, sorted by start.

    ``parent`` indexes the previous level; ``rate`` and ``full`` describe how
    this node's own children were chosen (undefined at the leaves).
    """

    starts: np.ndarray
    precision: np.ndarray
    parent: np.ndarray
    rate: np.ndarray
    full: np.ndarray

    def __len__(self) -> int:
        return int(self.starts.size)


@dataclass
class SampleTree:
    params: TreeParams
    levels: List[Level]

    @property
    def query_set(self) -> np.ndarray:
        return self.levels[-1].starts

    def children(self, level: int, index: int) -> slice:
        """Slice of level ``level + 1`` holding the children of one node."""
        parent = self.levels[level + 1].parent
        lo = int(np.searchsorted(parent, index, side="left"))
        hi = int(np.searchsorted(parent, index, side="right"))
        return slice(lo, hi)

    def node_count(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def is_full(self) -> bool:
        return len(self.query_set) == self.params.n

    # -- line format: header, then ``level start precision p_v parent_start``
    def to_text(self) -> str:
        p = self.params
        out = [f"#edist-sample v1 n={p.n} b={p.b} h={p.h} beta={p.beta!r} "
               f"c_p={p.c_p!r} zeta={p.zeta!r} seed={p.seed} "
               f"root_factor={p.root_factor!r} queries={query_count(self)}"]
        for i, lv in enumerate(self.levels):
            parent_starts = (self.levels[i - 1].starts[lv.parent] if i else np.full(len(lv), -1))
            for s, w, r, ps in zip(lv.starts.tolist(), lv.precision.tolist(),
                                   lv.rate.tolist(), parent_starts.tolist()):
                out.append(f"{i} {s} {w!r} {r!r} {ps}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SampleTree":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        params = TreeParams(n=int(head["n"]), b=int(head["b"]), beta=float(head["beta"]),
                            c_p=float(head["c_p"]), zeta=float(head["zeta"]),
                            seed=int(head["seed"]), root_factor=float(head["root_factor"]))
        rows: list[list] = [[] for _ in range(params.h + 1)]
        for ln in lines[1:]:
            lvl, s, w, r, ps = ln.split()
            rows[int(lvl)].append((int(s), float(w), float(r), int(ps)))
        levels = []
        for i, row in enumerate(rows):
            starts = np.array([r[0] for r in row], dtype=np.int64)
            prev = levels[i - 1].starts if i else np.zeros(0, dtype=np.int64)
            parent = (np.searchsorted(prev, [r[3] for r in row]).astype(np.int64)
                      if i else np.zeros(len(row), dtype=np.int64))
            rate = np.array([r[2] for r in row], dtype=np.float64)
            levels.append(Level(starts, np.array([r[1] for r in row], dtype=np.float64),
                                parent, rate, rate >= 1))
        return cls(params, levels)


def level_rate(params: TreeParams, precision: np.ndarray) -> np.ndarray:
    """``p_v = (w_v / b) * c_p * log2(n)**3`` (uncapped)."""
    return precision / params.b * params.c_p * params.log_n ** 3


def build_sample_tree(params: TreeParams) -> SampleTree:
    """Run the top-down sampler; deterministic in ``params.seed``."""
    n, b, h = params.n, params.b, params.h
    starts = np.zeros(1, dtype=np.int64)
    precision = np.array([params.beta * params.root_factor])
    parent = np.zeros(1, dtype=np.int64)
    levels: List[Level] = []
    for i in range(h):
        rate = level_rate(params, precision)
        full = (rate >= 1) | (not params.prune)
        child_len = n // b ** (i + 1)
        offs = np.arange(b, dtype=np.int64) * child_len
        grid = starts[:, None] + offs[None, :]
        u = _rng.uniforms(params.seed, _rng.TAG_KEEP, i, grid)
        keep = full[:, None] | (u < rate[:, None])
        levels.append(Level(starts, precision, parent, rate, full))
        rows, _ = np.nonzero(keep)
        child_starts = grid[keep]
        dist = PrecisionDist.for_tree(params, first_level=(i == 0))
        fresh = dist.inverse(_rng.uniforms(params.seed, _rng.TAG_PRECISION, i + 1, child_starts))
        precision = np.where(full[rows], rate[rows], fresh)
        starts, parent = child_starts, rows.astype(np.int64)
    nan = np.full(starts.size, np.nan)
    levels.append(Level(starts, precision, parent, nan, np.zeros(starts.size, dtype=bool)))
    return SampleTree(params, levels)


def query_count(tree: SampleTree) -> int:
    return int(tree.query_set.size)


def uniform_subsample(a, w: float, eps: float, delta: float, zeta: float,
                      rng: np.random.Generator):
    """Keep each ``a_j`` with ``p_w = min(1, (w/b) * zeta * log2(1/delta) / eps**2)``.

    Returns ``(estimate, J, p_w)`` with ``estimate = sum_{j in J} a_j / p_w``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = a.size
    p = min(1.0, (w / b) * zeta * math.log2(1.0 / delta) / eps ** 2)
    keep = rng.random(b) < p
    J = np.nonzero(keep)[0]
    return float(a[J].sum() / p), J, p

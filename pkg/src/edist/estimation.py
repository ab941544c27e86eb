"""Bottom-up estimation of the tree distance over a sample tree.

Every sampled node ``v = (i, s)`` gets a row ``tau(v, z)`` over the target
positions it can influence.  With shift radius ``cap`` the root only looks at
``z = 0``, so level ``i`` only ever needs ``z`` in ``[s - i*cap, s + i*cap]``;
rows are stored on that window (clipped to the global range ``[-n, 2n)``),
which leaves the root value unchanged and makes the cost proportional to
queries times window width.

Inside a minimisation, targets outside ``[-n, 2n)`` are ignored; when a
parent reads a child at such a target it gets the child's block length, the
exact distance there.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _rng
from .etree import NodeId, TreeParams, distance_transform, pad_pair
from .sampling import PrecisionDist, SampleTree, build_sample_tree, truncated_single
from .text import Text, TextLike, as_text, compact_pair

class AccessViolation(RuntimeError):
    """Raised when the estimator reads ``x`` outside the sampled query set."""


class GuardedText:
    """Read-only view of ``x`` that only answers positions in ``allowed``."""

    def __init__(self, symbols: np.ndarray, allowed: np.ndarray):
        self._symbols = np.asarray(symbols)
        self._allowed = np.unique(np.asarray(allowed, dtype=np.int64))
        self.reads = 0
        self.touched: set[int] = set()

    def __len__(self) -> int:
        return int(self._symbols.size)

    def read(self, positions) -> np.ndarray:
        pos = np.atleast_1d(np.asarray(positions, dtype=np.int64))
        ok = np.isin(pos, self._allowed)
        if not ok.all():
            bad = int(pos[~ok][0])
            raise AccessViolation(f"read of x[{bad}] outside the query set")
        self.reads += int(pos.size)
        self.touched.update(pos.tolist())
        return self._symbols[pos]

    def __getitem__(self, i: int) -> int:
        return int(self.read([i])[0])


# -- range minima ----------------------------------------------------------------


class RangeMin:
    """Sparse table of dyadic minima: build ``O(m log m)``, query ``O(1)``."""

    def __init__(self, values):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("range_min_build needs a non-empty vector")
        self.table = [v]
        width = 1
        while 2 * width <= v.size:
            prev = self.table[-1]
            self.table.append(np.minimum(prev[:-width], prev[width:]))
            width *= 2

    def __len__(self) -> int:
        return int(self.table[0].size)

    def query(self, lo, hi):
        """Minimum over ``values[lo..hi]`` inclusive; vectorised over arrays."""
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        if np.any(lo > hi) or np.any(lo < 0) or np.any(hi >= len(self)):
            raise IndexError("range outside the indexed vector")
        span = hi - lo + 1
        j = np.floor(np.log2(span)).astype(np.int64)
        if j.ndim == 0:
            t = self.table[int(j)]
            return float(min(t[lo], t[hi - (1 << int(j)) + 1]))
        out = np.empty(lo.shape)
        for jj in np.unique(j):
            sel = j == jj
            t = self.table[int(jj)]
            out[sel] = np.minimum(t[lo[sel]], t[hi[sel] - (1 << int(jj)) + 1])
        return out


def range_min_build(values) -> RangeMin:
    return RangeMin(values)


@dataclass
class TauTable:
    """``values[i] = tau(node, z0 + i)``, with a lazily built range-min index."""

    node: NodeId
    values: np.ndarray
    z0: int
    _rmq: Optional[RangeMin] = field(default=None, repr=False)

    @property
    def rmq(self) -> RangeMin:
        if self._rmq is None:
            self._rmq = RangeMin(self.values)
        return self._rmq

    def window_min(self, lo_z: int, hi_z: int) -> float:
        a = max(lo_z - self.z0, 0)
        e = min(hi_z - self.z0, len(self.values) - 1)
        if a > e:
            return math.inf
        return self.rmq.query(a, e)


# -- shift grids ----------------------------------------------------------------


def shift_grid(n: int, beta: float) -> List[Tuple[float, int]]:
    """Grid ``{0} U {e^(i/log2 n)}`` up to ``cap = min(3n/beta, n)``, plus ``cap``.

    Entries are ``(k, floor(k))``; one entry per distinct radius, keeping the
    smallest ``k``.
    """
    L = max(math.log2(n), 1.0)
    cap = min(3.0 * n / beta, float(n))
    grid: Dict[int, float] = {0: 0.0}
    if cap >= 1:
        top = int(math.floor(L * math.log(cap)))
        for i in range(top + 1):
            k = math.exp(i / L)
            if k <= cap:
                r = int(math.floor(k))
                grid.setdefault(r, k)
        grid.setdefault(int(math.floor(cap)), cap)
    return sorted(((k, r) for r, k in grid.items()), key=lambda kr: kr[1])


def delta_restricted(child_tau: TauTable, z: int, offset: int, n: int, beta: float) -> float:
    """``min_k (k + min_{|k'| <= k} tau(z + offset + k'))`` over :func:`shift_grid`."""
    pos = z + offset
    best = math.inf
    for k, r in shift_grid(n, beta):
        best = min(best, k + child_tau.window_min(pos - r, pos + r))
    return best


def delta_unrestricted(child_tau: TauTable, z: int, offset: int, n: int) -> float:
    pos = z + offset
    best = math.inf
    for k in range(n + 1):
        best = min(best, k + child_tau.window_min(pos - k, pos + k))
    return best


def restricted_transform(rows: np.ndarray, grid: Sequence[Tuple[float, int]]) -> np.ndarray:
    """Row-wise grid-restricted shift minimum; ``inf`` cells never win.

    Dyadic minima are grown incrementally as the radius increases, and the
    scan stops once ``k`` exceeds the spread of the finite values (no larger
    shift can improve any cell).
    """
    rows = np.asarray(rows, dtype=np.float64)
    out = rows.copy()
    finite = rows[np.isfinite(rows)]
    if finite.size == 0:
        return out
    spread = float(finite.max() - finite.min())
    steps = [(k, r) for k, r in grid if r > 0 and k < spread]
    if not steps:
        return out
    pad = steps[-1][1]
    m, width = rows.shape
    padded = np.full((m, width + 2 * pad), np.inf)
    padded[:, pad: pad + width] = rows
    cur, size = padded, 1
    for k, r in steps:
        while 2 * size <= 2 * r + 1:
            cur = np.minimum(cur[:, :-size], cur[:, size:])
            size *= 2
        a = pad - r
        e = pad + r - size + 1
        win = np.minimum(cur[:, a: a + width], cur[:, e: e + width])
        np.minimum(out, win + k, out=out)
    return out


# -- reconstruction --------------------------------------------------------------


def _canonical_order(a_hat: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.lexsort((a_hat.sum(axis=1), w))


def reconstruct_rows(a_hat: np.ndarray, w: np.ndarray, dist: PrecisionDist,
                     rng: np.random.Generator) -> np.ndarray:
    """R applied column-wise to ``a_hat`` of shape ``(items, cells)``.

    For each item the ``k`` single copies behind its precision are
    regenerated conditionally on their maximum ``w_i`` and shared by all
    cells; only copies above the smallest threshold are materialised.
    """
    a_hat = np.asarray(a_hat, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if a_hat.ndim != 2 or a_hat.shape[0] != w.size:
        raise ValueError("a_hat and w lengths differ")
    k, t = dist.k, dist.t
    counts = np.zeros(a_hat.shape[1])
    for i in _canonical_order(a_hat, w):
        row, wi = a_hat[i], float(w[i])
        amax = float(row.max()) if row.size else 0.0
        if not amax > 0:
            continue
        with np.errstate(divide="ignore"):
            theta = np.where(row > 0, t / np.where(row > 0, row, 1.0), np.inf)
        counts += wi >= theta
        if k == 1:
            continue
        theta_min = max(1.0, t / amax)
        if wi <= 1.0:
            # every copy equals 1
            counts += (k - 1) * (theta <= 1.0)
            continue
        if theta_min > wi:
            continue
        q = (1.0 / theta_min - 1.0 / wi) / (1.0 - 1.0 / wi)
        c = int(rng.binomial(k - 1, min(q, 1.0)))
        if c == 0:
            continue
        u = rng.random(c)
        vals = np.sort(1.0 / (1.0 / theta_min - u * (1.0 / theta_min - 1.0 / wi)))
        counts += c - np.searchsorted(vals, theta, side="left")
    return counts / k * t / dist.nu


def reconstruct_R(a_hat, w, dist: PrecisionDist, rng: np.random.Generator) -> float:
    """Estimate ``sum a_i`` from approximations ``a_hat`` with precisions ``w``."""
    a = np.asarray(a_hat, dtype=np.float64).ravel()
    ww = np.asarray(w, dtype=np.float64).ravel()
    if a.size != ww.size:
        raise ValueError(f"length mismatch: {a.size} values, {ww.size} precisions")
    if a.size == 0:
        return 0.0
    # one cell: only the number of copies above each threshold matters
    k, t = dist.k, dist.t
    order = np.lexsort((a, ww))
    a, ww = a[order], ww[order]
    pos = a > 0
    with np.errstate(divide="ignore"):
        theta = np.where(pos, t / np.where(pos, a, 1.0), np.inf)
    count = (pos & (ww >= theta)).astype(np.float64)
    if k > 1:
        th = np.maximum(theta, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(ww > 1.0, (1.0 / th - 1.0 / ww) / (1.0 - 1.0 / ww),
                         (theta <= 1.0).astype(np.float64))
        q = np.where(pos & (th <= ww), np.clip(q, 0.0, 1.0), 0.0)
        count += rng.binomial(k - 1, q)
    return float(count.sum() / k * t / dist.nu)


# -- approximator algebra --------------------------------------------------------


def is_approximator(value: float, truth: float, rho: float, f: float) -> bool:
    """``truth/f - rho <= value <= f*truth + rho`` (tiny float slack)."""
    tol = 1e-9 * max(1.0, abs(truth), abs(value))
    return truth / f - rho - tol <= value <= f * truth + rho + tol


def approx_add(a: Tuple[float, float], b: Tuple[float, float]) -> Tuple[float, float]:
    """Sum of a ``(rho1, f1)`` and a ``(rho2, f2)`` approximator."""
    return a[0] + b[0], max(a[1], b[1])


def approx_compose(outer: Tuple[float, float], inner: Tuple[float, float]) -> Tuple[float, float]:
    """Approximating an approximator: ``(rho1 + f1*rho2, f1*f2)``."""
    return outer[0] + outer[1] * inner[0], outer[1] * inner[1]


def approx_scale(a: Tuple[float, float], c: float) -> Tuple[float, float]:
    return a[0] * c, a[1]


# -- the estimator ---------------------------------------------------------------


@dataclass
class EstimateReport:
    estimate: float
    queries_used: int
    seed: int
    beta: float
    b: int
    n: int
    wall_time: float
    decision: Optional[str] = None
    shift_mode: str = "restricted"

    def to_record(self) -> str:
        fields = [("estimate", repr(float(self.estimate))), ("queries", self.queries_used),
                  ("decision", self.decision or "-"), ("beta", repr(float(self.beta))),
                  ("b", self.b), ("n", self.n), ("seed", self.seed),
                  ("millis", f"{self.wall_time * 1000:.3f}")]
        return "#edist-approx v1\n" + "\t".join(f"{k}={v}" for k, v in fields) + "\n"


@dataclass
class _Rows:
    """Per-node values ``base[row[c], kappa - lo[c]]`` on ``kappa = z + n``."""

    base: np.ndarray
    row: np.ndarray
    lo: np.ndarray


def _windows(starts: np.ndarray, radius: int, n: int) -> Tuple[np.ndarray, int]:
    width = 2 * radius + 1
    if width >= 3 * n:
        return np.zeros(starts.size, dtype=np.int64), 3 * n
    return starts + n - radius, width


def _child_row(child: _Rows, c: int, kappa0: int, width: int, n: int,
               fill: float) -> np.ndarray:
    """Values of child ``c`` at ``kappa0 + 0..width-1``; a view when possible."""
    src = child.base[child.row[c]]
    shift = kappa0 - int(child.lo[c])
    a, e = max(kappa0, 0), min(kappa0 + width, 3 * n)
    if a == kappa0 and e == kappa0 + width:
        return src[shift: shift + width]
    out = np.full(width, fill)
    if a < e:
        out[a - kappa0: e - kappa0] = src[a - kappa0 + shift: e - kappa0 + shift]
    return out


def estimate_e_distance(x: TextLike, y: TextLike, tree: SampleTree,
                        params: Optional[TreeParams] = None,
                        shift_mode: str = "restricted",
                        guard: Optional[GuardedText] = None) -> EstimateReport:
    """Estimate the tree distance from ``x`` to ``y`` reading ``x`` only at the queries.

    ``shift_mode`` is ``"restricted"`` (geometric shift grid capped at
    ``3n/beta``) or ``"exact"`` (every shift up to ``n``).
    """
    t0 = time.perf_counter()
    if params is None:
        params = tree.params
    if params != tree.params:
        raise ValueError("tree was built from different parameters")
    if shift_mode not in ("restricted", "exact"):
        raise ValueError(f"unknown shift mode {shift_mode!r}")
    cx, cy, _ = compact_pair(x, y)
    n, b, h = params.n, params.b, params.h
    if cx.size != n or cy.size != n:
        raise ValueError(f"strings must have the tree length {n}")
    if guard is None:
        guard = GuardedText(cx, tree.query_set)
    exact = shift_mode == "exact"
    grid = shift_grid(n, params.beta)
    cap = n if exact else int(math.floor(min(3.0 * n / params.beta, n)))

    def shift_min(rows: np.ndarray) -> np.ndarray:
        if exact:
            return distance_transform(rows, window=n)
        return restricted_transform(rows, grid)

    # leaves: one row per distinct symbol, over the whole range
    leaves = tree.levels[h]
    sym = guard.read(leaves.starts) if len(leaves) else np.zeros(0, dtype=np.int64)
    uniq, inv = np.unique(sym, return_inverse=True)
    leaf_rows = np.ones((uniq.size, 3 * n))
    leaf_rows[:, n: 2 * n] = cy[None, :] != uniq[:, None]
    child = _Rows(shift_min(leaf_rows) if h > 0 else leaf_rows,
                  inv.astype(np.int64), np.zeros(inv.size, dtype=np.int64))

    if h == 0:
        value = float(leaf_rows[inv[0], n]) if len(leaves) else 0.0
        return EstimateReport(value, len(guard.touched), params.seed, params.beta, b, n,
                              time.perf_counter() - t0, shift_mode=shift_mode)

    for i in range(h - 1, -1, -1):
        lv, kids = tree.levels[i], tree.levels[i + 1]
        child_len = n // b ** (i + 1)
        radius = 0 if i == 0 else (3 * n if exact else i * cap)
        lo, width = _windows(lv.starts, radius, n)
        tau = np.zeros((len(lv), width))
        if len(lv) and len(kids):
            kappa0 = lo[kids.parent] + kids.starts - lv.starts[kids.parent]
            fill = float(child_len)
            parent_of = kids.parent.tolist()
            full = lv.full.tolist()
            k0s = kappa0.tolist()
            for c, v in enumerate(parent_of):
                if full[v]:
                    tau[v] += _child_row(child, c, k0s[c], width, n, fill)
            bounds = np.searchsorted(kids.parent, np.arange(len(lv) + 1))
            dist = PrecisionDist.for_tree(params, first_level=(i == 0))
            for v in np.nonzero(~lv.full)[0]:
                sel = np.arange(bounds[v], bounds[v + 1])
                if sel.size == 0:
                    continue
                vals = np.stack([_child_row(child, int(c), int(kappa0[c]), width, n, fill)
                                 for c in sel])
                live = _inside(lo[v], width, n)
                a_hat = np.where(live[None, :], vals / child_len, 0.0)
                rng = _rng.node_generator(params.seed, _rng.TAG_RECONSTRUCT, i,
                                          int(lv.starts[v]))
                tau[v] = (reconstruct_rows(a_hat, kids.precision[sel], dist, rng)
                          * child_len / lv.rate[v])
        live = np.ones_like(tau, dtype=bool)
        if width < 3 * n or i == 0:
            kap = lo[:, None] + np.arange(width)[None, :]
            live = (kap >= 0) & (kap < 3 * n)
        tau = np.where(live, tau, np.inf)
        if i == 0:
            value = float(tau[0, 0]) if len(lv) else 0.0
            break
        child = _Rows(shift_min(tau), np.arange(len(lv), dtype=np.int64), lo)
    return EstimateReport(value, len(guard.touched), params.seed, params.beta, b, n,
                          time.perf_counter() - t0, shift_mode=shift_mode)


def _inside(lo: int, width: int, n: int) -> np.ndarray:
    kap = lo + np.arange(width)
    return (kap >= 0) & (kap < 3 * n)


# -- deciders and the driver ----------------------------------------------------


def dtep_report(x: TextLike, y: TextLike, beta: float, params: TreeParams,
                shift_mode: str = "restricted") -> EstimateReport:
    """Build a tree at threshold ``beta`` and estimate; far iff estimate > 2n/beta."""
    p = params.with_(beta=beta)
    tree = build_sample_tree(p)
    rep = estimate_e_distance(x, y, tree, p, shift_mode=shift_mode)
    rep.decision = "far" if rep.estimate > 2.0 * p.n / beta else "close"
    return rep


def dtep_decide(x: TextLike, y: TextLike, beta: float, params: TreeParams) -> str:
    return dtep_report(x, y, beta, params).decision


def beta_seed(seed: int, beta: float) -> int:
    return int(_rng.hash_key(seed, 0xBE7A, int(beta))[0] >> np.uint64(1))


@dataclass
class ApproxResult:
    estimate: float
    queries: int
    time: float
    beta_star: Optional[float]
    reports: List[EstimateReport]
    n: int
    b: int

    def __iter__(self):
        return iter((self.estimate, self.queries, self.time))


def approximate_ed(x: TextLike, y: TextLike, b: int, seed: int, **overrides) -> ApproxResult:
    """Approximate ``ed(x, y)`` by scanning thresholds ``beta = 2, 4, ..., n``.

    Both strings are padded to a common power of ``b``.  The scan stops at the
    first ``beta`` deciding far; the estimate is ``n / beta*`` (0 if every
    threshold decides close).  ``queries`` counts distinct positions of ``x``
    read over the whole scan.
    """
    t0 = time.perf_counter()
    tx, ty = as_text(x), as_text(y)
    if len(tx) == 0 and len(ty) == 0:
        return ApproxResult(0.0, 0, 0.0, None, [], 0, b)
    if len(tx) == 0 or len(ty) == 0:
        # nothing to sample from; the distance is the other length
        return ApproxResult(float(max(len(tx), len(ty))), 0, time.perf_counter() - t0,
                            None, [], 0, b)
    px, py, n, _ = pad_pair(tx, ty, b)
    reports: List[EstimateReport] = []
    touched: set[int] = set()
    beta_star = None
    beta = 2
    while beta <= n:
        p = TreeParams(n=n, b=b, beta=float(beta), seed=beta_seed(seed, beta), **overrides)
        tree = build_sample_tree(p)
        guard = GuardedText(px.symbols, tree.query_set)
        rep = estimate_e_distance(px, py, tree, p, guard=guard)
        rep.decision = "far" if rep.estimate > 2.0 * n / beta else "close"
        reports.append(rep)
        touched |= guard.touched
        if rep.decision == "far":
            beta_star = beta
            break
        beta *= 2
    est = n / beta_star if beta_star else 0.0
    return ApproxResult(est, len(touched), time.perf_counter() - t0, beta_star, reports, n, b)

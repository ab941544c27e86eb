import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edist.estimation import (AccessViolation, EstimateReport, GuardedText, TauTable,
                              approx_add, approx_compose, approx_scale, approximate_ed,
                              delta_restricted, delta_unrestricted, dtep_decide, dtep_report,
                              estimate_e_distance, is_approximator, range_min_build,
                              reconstruct_R, reconstruct_rows, restricted_transform, shift_grid)
from edist.etree import TreeParams, exact_e_distance
from edist.exact import ed
from edist.hard import cyclic_shift
from edist.instances import make_pair, random_edits
from edist.sampling import PrecisionDist, build_sample_tree
from edist.text import Text


# -- range minima -------------------------------------------------------------------


def test_range_min_examples():
    r = range_min_build([5, 1, 3])
    assert r.query(0, 2) == 1
    c = range_min_build([4.0] * 37)
    assert all(c.query(i, j) == 4.0 for i in range(37) for j in range(i, 37))
    with pytest.raises(ValueError):
        range_min_build([])
    with pytest.raises(IndexError):
        r.query(2, 1)


def test_range_min_against_scan():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = rng.integers(0, 1000, size=int(rng.integers(1, 300)))
        r = range_min_build(v)
        lo = rng.integers(0, v.size, 100)
        hi = lo + (rng.random(100) * (v.size - lo)).astype(int)
        want = np.array([v[a: b + 1].min() for a, b in zip(lo, hi)])
        assert np.array_equal(r.query(lo, hi), want)


# -- shift restriction -------------------------------------------------------------


def test_shift_grid_shape():
    grid = shift_grid(1024, 4.0)
    ks = [k for k, _ in grid]
    rs = [r for _, r in grid]
    assert grid[0] == (0.0, 0)
    assert rs == sorted(set(rs)) and rs[-1] == 768
    assert all(r <= k for k, r in grid)
    assert max(ks) <= 768


def test_delta_examples():
    zero = TauTable((1, 0), np.zeros(48), -16)
    assert delta_restricted(zero, 3, 4, 16, 2.0) == 0
    spike = TauTable((1, 0), np.full(48, 9.0), -16)
    spike.values[7 + 16] = 0.0
    assert delta_restricted(spike, 3, 4, 16, 2.0) == 0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([16, 64, 256]), st.sampled_from([2.0, 4.0, 8.0]))
def test_restricted_shift_within_factor(seed, n, beta):
    rng = np.random.default_rng(seed)
    tau = TauTable((1, 0), rng.integers(0, n, 3 * n).astype(float), -n)
    z = int(rng.integers(-n, 2 * n))
    d = delta_unrestricted(tau, z, 0, n)
    dr = delta_restricted(tau, z, 0, n, beta)
    assert d <= dr + 1e-9
    if d <= 3 * n / beta:
        assert dr <= math.exp(1 / math.log2(n)) * d + 1e-9


def test_vectorised_transform_matches_per_cell():
    rng = np.random.default_rng(4)
    n, beta = 64, 4.0
    grid = shift_grid(n, beta)
    rows = rng.integers(0, 40, size=(3, 3 * n)).astype(float)
    out = restricted_transform(rows, grid)
    for i in range(3):
        tau = TauTable((1, 0), rows[i], -n)
        for z in range(-n, 2 * n, 7):
            assert out[i, z + n] == pytest.approx(delta_restricted(tau, z, 0, n, beta))


# -- reconstruction ------------------------------------------------------------------


def _dist():
    return PrecisionDist.make(1e4, 500, 0.1, 0.05, 1.0)


def test_reconstruct_trivial_cases():
    d = _dist()
    rng = np.random.default_rng(0)
    assert reconstruct_R(np.zeros(50), np.full(50, 10.0), d, rng) == 0
    assert reconstruct_R([], [], d, rng) == 0
    with pytest.raises(ValueError):
        reconstruct_R([1.0, 2.0], [3.0], d, rng)


def test_reconstruct_half_values():
    d, m, f = _dist(), 10 ** 4, 1.01
    hits = 0
    for trial in range(200):
        rng = np.random.default_rng([17, trial])
        w = d.sample(rng, m)
        a_hat = 0.5 + 1.0 / w
        hits += is_approximator(reconstruct_R(a_hat, w, d, rng), 5000.0, 500.0,
                                f * math.exp(0.1))
    assert hits >= 190


@given(st.integers(0, 2 ** 32 - 1))
def test_reconstruct_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    d = PrecisionDist.make(100, 1.0, 0.5, 0.1)
    a = rng.random(40)
    w = d.sample(rng, 40)
    perm = rng.permutation(40)
    r1 = reconstruct_R(a, w, d, np.random.default_rng(1))
    r2 = reconstruct_R(a[perm], w[perm], d, np.random.default_rng(1))
    assert r1 == r2


def test_row_and_scalar_paths_agree_in_law():
    d = _dist()
    rng = np.random.default_rng(3)
    a = rng.random(300) * 0.05
    w = d.sample(rng, 300)
    a_hat = a * 1.01 + 1 / w
    r1 = [reconstruct_R(a_hat, w, d, np.random.default_rng(i)) for i in range(300)]
    r2 = [reconstruct_rows(a_hat[:, None], w, d, np.random.default_rng(i))[0] for i in range(300)]
    se = math.hypot(np.std(r1), np.std(r2)) / math.sqrt(300)
    assert abs(np.mean(r1) - np.mean(r2)) < 5 * se


# -- approximator algebra ---------------------------------------------------------------

pos = st.floats(0, 100, allow_nan=False)
fac = st.floats(1, 2, allow_nan=False)
unit = st.floats(0, 1)


def _approx(t, rho, f, u):
    """A point inside the admissible interval for ``t``."""
    lo, hi = t / f - rho, f * t + rho
    return lo + u * (hi - lo)


@given(pos, pos, pos, fac, unit, unit)
def test_additivity(t1, t2, rho, f, u1, u2):
    v = _approx(t1, rho, f, u1) + _approx(t2, rho, f, u2)
    r, g = approx_add((rho, f), (rho, f))
    assert (r, g) == (2 * rho, f)
    assert is_approximator(v, t1 + t2, r, g)


@given(pos, pos, fac, pos, fac, unit, unit)
def test_composition(t, rho, f, rho2, f2, u1, u2):
    inner = _approx(t, rho, f, u1)
    outer = _approx(max(inner, 0.0), rho2, f2, u2)
    r, g = approx_compose((rho2, f2), (rho, f))
    assert r == pytest.approx(rho2 + f2 * rho) and g == pytest.approx(f * f2)
    if inner >= 0:
        assert is_approximator(outer, t, r, g)


@given(pos, pos, fac, unit, st.floats(0.01, 10))
def test_scaling(t, rho, f, u, c):
    v = _approx(t, rho, f, u) * c
    assert is_approximator(v, t * c, *approx_scale((rho, f), c))


# -- estimation --------------------------------------------------------------------------


@pytest.mark.parametrize("b", [2, 4, 16])
def test_degenerates_to_exact_distance(b):
    rng = np.random.default_rng(b)
    for n in [b, b * b, 256]:
        for family in ("random", "random-edits", "rotations"):
            x, y = make_pair(family, n, rng)
            p = TreeParams(n=n, b=b, prune=False)
            tree = build_sample_tree(p)
            rep = estimate_e_distance(x, y, tree, p, shift_mode="exact")
            assert rep.estimate == exact_e_distance(x, y, b)
            assert rep.queries_used == n


def test_guard_blocks_reads_outside_query_set():
    g = GuardedText(np.arange(10), np.array([1, 3]))
    assert g.read([1, 3]).tolist() == [1, 3]
    with pytest.raises(AccessViolation):
        g.read([2])
    assert g.touched == {1, 3} and g.reads == 2


def test_estimator_reads_only_queries():
    p = TreeParams(n=4096, b=16, beta=4.0, c_p=1e-3, seed=5)
    tree = build_sample_tree(p)
    assert not tree.is_full()
    rng = np.random.default_rng(0)
    x, y = make_pair("random-edits", 4096, rng)
    guard = GuardedText(x.symbols, tree.query_set)
    rep = estimate_e_distance(x, y, tree, p, guard=guard)
    assert guard.touched <= set(tree.query_set.tolist())
    assert rep.queries_used == len(tree.query_set)
    with pytest.raises(ValueError):
        estimate_e_distance(x, y, tree, p.with_(seed=6))


def test_identical_strings_estimate_small():
    n, beta = 4096, 4.0
    rng = np.random.default_rng(1)
    x = Text.random(n, 4, rng)
    ok = 0
    for seed in range(20):
        p = TreeParams(n=n, b=16, beta=beta, c_p=1e-3, seed=seed)
        ok += estimate_e_distance(x, x, build_sample_tree(p), p).estimate <= n / beta
    assert ok >= 18


def test_substitution_band():
    n, beta = 4096, 4.0
    rng = np.random.default_rng(2)
    ok = 0
    for seed in range(50):
        y = Text.random(n, 4, rng)
        xs = y.symbols.copy()
        idx = rng.choice(n, int(n / (2 * beta)), replace=False)
        xs[idx] = (xs[idx] + rng.integers(1, 4, idx.size)) % 4
        x = Text(xs, 4)
        E = exact_e_distance(x, y, 16)
        p = TreeParams(n=n, b=16, beta=beta, c_p=1e-3, seed=seed)
        est = estimate_e_distance(x, y, build_sample_tree(p), p).estimate
        ok += E / 4 - n / beta <= est <= 4 * E + n / beta
    assert ok >= 45


def test_dtep_decisions():
    n, beta = 4096, 8.0
    rng = np.random.default_rng(3)
    far = close = 0
    for seed in range(10):
        p = TreeParams(n=n, b=16, beta=beta, c_p=1e-3, seed=seed)
        x, y = Text.random(n, 256, rng), Text.random(n, 256, rng)
        far += dtep_decide(x, y, beta, p) == "far"
        x = Text.random(n, 256, rng)
        # a rotation by r costs about b*r in tree distance, so stay below n/beta
        close += dtep_decide(x, cyclic_shift(x, int(n / (8 * beta * 16))), beta, p) == "close"
        assert dtep_decide(x, x, beta, p) == "close"
    assert far >= 9 and close >= 9


def test_rotation_by_n_over_8beta_is_already_far_in_tree_distance():
    n, beta = 4096, 8.0
    x = Text.random(n, 256, np.random.default_rng(4))
    y = cyclic_shift(x, int(n / (8 * beta)))
    assert ed(x, y) <= 2 * n / (8 * beta)
    assert exact_e_distance(x, y, 16) > 2 * n / beta


def test_report_record_format():
    p = TreeParams(n=256, b=4, beta=2.0, seed=7)
    x = Text.random(256, 4, np.random.default_rng(0))
    rep = dtep_report(x, x, 2.0, p)
    head, body = rep.to_record().splitlines()
    assert head == "#edist-approx v1"
    fields = dict(kv.split("=", 1) for kv in body.split("\t"))
    assert set(fields) == {"estimate", "queries", "decision", "beta", "b", "n", "seed", "millis"}
    assert fields["decision"] == "close" and int(fields["queries"]) <= 256


def test_approximate_ed_identical_and_empty():
    x = Text.random(1000, 4, np.random.default_rng(0))
    res = approximate_ed(x, x, 4, seed=1)
    assert res.estimate == 0 and res.queries <= 1024
    est, queries, secs = approximate_ed("", "abc", 4, seed=1)
    assert est == 3 and queries == 0


def test_approximate_ed_ratio_on_random_edits():
    n, b = 4096, 16
    h = 3
    rng = np.random.default_rng(9)
    for i in range(100):
        x = Text.random(n, 4, rng)
        y = random_edits(x, int(rng.integers(1, n // 8)), rng)
        res = approximate_ed(x, y, b, seed=i, c_p=1e-3)
        d = ed(x, y)
        assert 1 / (12 * h * b) <= res.estimate / d <= 12 * h * b
        assert res.queries <= n


def test_report_fields_roundtrip():
    rep = EstimateReport(1.5, 10, 3, 4.0, 16, 4096, 0.25, "far")
    body = rep.to_record().splitlines()[1]
    assert "estimate=1.5" in body and "millis=250.000" in body

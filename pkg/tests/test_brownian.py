"""Tests for interval coefficients: sampling laws, composition, refinement.

The refinement bridge is checked against a brute-force oracle that assembles
the joint Gaussian covariance of interval functionals by trapezoid quadrature
of the Brownian kernel min(r, t) on a fine grid, then conditions by a Schur
complement.  Composition is checked against direct quadrature of a piecewise
linear reconstruction of the same path.
"""

import numpy as np
import pytest

from ulmc import brownian as bm


# ---------------------------------------------------------------------------
# oracles


def _kernel_cov(ratio, n_grid):
    """Covariance of (w_L, i1_L, i2_L, w, i1, i2) for a unit parent interval.

    Functionals of the path are written as weight vectors against the grid
    values of W, so every covariance is weightsᵀ min(r,t) weights.
    """
    s = 1.0
    a = ratio * s
    t = np.linspace(0.0, s, n_grid + 1)[1:]
    kern = np.minimum.outer(t, t)

    def point(x):
        v = np.zeros(len(t))
        v[np.argmin(np.abs(t - x))] = 1.0
        return v

    def trap(lo, hi):
        w = np.zeros(len(t))
        idx = np.nonzero((t >= lo - 1e-15) & (t <= hi + 1e-15))[0]
        dts = np.diff(t[idx])
        inner = np.zeros(len(idx))
        inner[:-1] += dts / 2
        inner[1:] += dts / 2
        w[idx] = inner
        return w

    w_i1l = trap(0.0, a)
    w_i2l = w_i1l * np.clip(a - t, 0.0, None)  # i2 = int (a-r) W_r dr
    w_i1 = trap(0.0, s)
    w_i2 = w_i1 * (s - t)
    funcs = np.stack([point(a), w_i1l, w_i2l, point(s), w_i1, w_i2])
    return funcs @ kern @ funcs.T


def _conditional_from_kernel(ratio, n_grid=4000):
    """Oracle conditional law (mean map, covariance) of the left part."""
    cov = _kernel_cov(ratio, n_grid)
    spp = cov[3:, 3:]
    slp = cov[:3, 3:]
    sll = cov[:3, :3]
    gain = slp @ np.linalg.inv(spp)
    return gain, sll - gain @ slp.T


def _reconstruction_integrals(leaves, pts_per_leaf=64):
    """(W, I1, I2) of the union interval by quadrature of the reconstruction.

    Each leaf contributes a linear segment: a jump of h+6k at its left end,
    slope (w-12k)/dt, and a jump of 6k-h at its right end.  Segment values
    are tabulated on pts_per_leaf sub-cells and integrated by the trapezoid
    rule; the running integral needed for I2 is accumulated the same way.
    """
    dt = leaves[0].dt
    w = np.stack([lf.w for lf in leaves])
    h = np.stack([lf.h for lf in leaves])
    k = np.stack([lf.k for lf in leaves])
    n = w.shape[0]
    dx = dt / pts_per_leaf
    tau = np.linspace(0.0, dt, pts_per_leaf + 1)

    start = np.concatenate([np.zeros_like(w[:1]), np.cumsum(w, axis=0)[:-1]])
    slope = (w - 12.0 * k) / dt
    vals = (
        (start + h + 6.0 * k)[:, None, :]
        + slope[:, None, :] * tau[None, :, None]
    )

    i1_leaf = np.trapezoid(vals, dx=dx, axis=1)
    c_start = np.concatenate(
        [np.zeros_like(i1_leaf[:1]), np.cumsum(i1_leaf, axis=0)[:-1]]
    )
    steps = 0.5 * dx * (vals[:, :-1, :] + vals[:, 1:, :])
    running = np.concatenate(
        [np.zeros((n, 1, w.shape[-1])), np.cumsum(steps, axis=1)], axis=1
    )
    running += c_start[:, None, :]
    i2_leaf = np.trapezoid(running, dx=dx, axis=1)
    return w.sum(axis=0), i1_leaf.sum(axis=0), i2_leaf.sum(axis=0)


def _split_to_depth(inc, rng, depth):
    level = [inc]
    for _ in range(depth):
        nxt = []
        for node in level:
            nxt.extend(bm.refine(node, rng))
        level = nxt
    return level


# ---------------------------------------------------------------------------
# sampling laws


def test_coefficient_variances_unit_interval():
    rng = np.random.default_rng(101)
    inc = bm.sample_increment(rng, 1.0, 2, shape=(1_000_000,))
    assert abs(np.var(inc.w) - 1.0) < 0.02
    assert abs(np.var(inc.h) - 1.0 / 12.0) < 0.02 / 12.0
    assert abs(np.var(inc.k) - 1.0 / 720.0) < 0.02 / 720.0


def test_coefficient_variances_scale_with_dt():
    rng = np.random.default_rng(102)
    inc = bm.sample_increment(rng, 0.25, 1, shape=(1_000_000,), with_m=True)
    assert abs(np.var(inc.k) - 0.25 / 720.0) < 0.02 * 0.25 / 720.0
    assert abs(np.var(inc.m) - 0.25 / 100800.0) < 0.02 * 0.25 / 100800.0
    assert abs(np.var(inc.w) - 0.25) < 0.02 * 0.25


def test_coefficients_uncorrelated():
    rng = np.random.default_rng(103)
    inc = bm.sample_increment(rng, 1.0, 1, shape=(1_000_000,), with_m=True)
    cols = np.stack(
        [inc.w.ravel(), inc.h.ravel(), inc.k.ravel(), inc.m.ravel()]
    )
    corr = np.corrcoef(cols)
    off = corr - np.eye(4)
    assert np.max(np.abs(off)) < 4.0 / np.sqrt(cols.shape[1])


def test_sample_increment_rejects_bad_args():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        bm.sample_increment(rng, 0.0, 3)
    with pytest.raises(ValueError):
        bm.sample_increment(rng, -1.0, 3)
    with pytest.raises(ValueError):
        bm.sample_increment(rng, 1.0, 0)


# ---------------------------------------------------------------------------
# time-integral maps


def test_time_integrals_of_plain_increment():
    inc = bm.BrownianIncrement(1.0, [1.0], [0.0], [0.0])
    ti = bm.to_time_integrals(inc)
    np.testing.assert_allclose(ti.i1, [0.5])
    np.testing.assert_allclose(ti.i2, [1.0 / 6.0])


def test_time_integrals_zero_path():
    ti = bm.to_time_integrals(bm.zero_increment(2.0, 3))
    assert not ti.i1.any() and not ti.i2.any()


def test_time_integral_roundtrip():
    rng = np.random.default_rng(104)
    inc = bm.sample_increment(rng, 0.37, 4, shape=(50,))
    back = bm.from_time_integrals(bm.to_time_integrals(inc))
    np.testing.assert_allclose(back.h, inc.h, rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(back.k, inc.k, rtol=1e-14, atol=1e-16)


def test_from_time_integrals_hand_example():
    # dt=2, w=0, h0=1, k0=0 gives i1 = 2*h0 = 2 and i2 = dt^2*h0/2 = 2
    ti = bm.TimeIntegrals(2.0, [0.0], [2.0], [2.0])
    inc = bm.from_time_integrals(ti)
    np.testing.assert_allclose(inc.h, [1.0], atol=1e-15)
    np.testing.assert_allclose(inc.k, [0.0], atol=1e-15)


def test_time_integrals_require_positive_dt():
    with pytest.raises(ValueError):
        bm.TimeIntegrals(0.0, [1.0], [0.0], [0.0])


# ---------------------------------------------------------------------------
# composition


def test_combine_zero_paths():
    out = bm.combine(bm.zero_increment(0.5, 2), bm.zero_increment(0.5, 2))
    assert out.dt == 1.0
    assert not out.w.any() and not out.h.any() and not out.k.any()


def test_combine_associative():
    rng = np.random.default_rng(105)
    a = bm.sample_increment(rng, 0.3, 3)
    b = bm.sample_increment(rng, 0.5, 3)
    c = bm.sample_increment(rng, 0.2, 3)
    left = bm.combine(bm.combine(a, b), c)
    right = bm.combine(a, bm.combine(b, c))
    np.testing.assert_allclose(left.w, right.w, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(left.h, right.h, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(left.k, right.k, rtol=1e-13, atol=1e-15)


def test_combine_dimension_mismatch():
    with pytest.raises(ValueError):
        bm.combine(bm.zero_increment(0.5, 2), bm.zero_increment(0.5, 3))


def test_combine_matches_reconstruction_quadrature():
    # Split [0, 0.5] and [0.5, 1] into 512 consistent leaves each and
    # integrate the piecewise-linear reconstruction on 2^16 grid cells.
    rng = np.random.default_rng(106)
    a = bm.sample_increment(rng, 0.5, 3)
    b = bm.sample_increment(rng, 0.5, 3)
    leaves = _split_to_depth(a, rng, 9) + _split_to_depth(b, rng, 9)
    w_q, i1_q, i2_q = _reconstruction_integrals(leaves, pts_per_leaf=64)

    ti = bm.to_time_integrals(bm.combine(a, b))
    np.testing.assert_allclose(ti.w, w_q, atol=1e-10, rtol=0)
    np.testing.assert_allclose(ti.i1, i1_q, atol=1e-10, rtol=0)
    np.testing.assert_allclose(ti.i2, i2_q, atol=1e-10, rtol=0)


# ---------------------------------------------------------------------------
# refinement


def test_refine_combine_roundtrip():
    rng = np.random.default_rng(107)
    for ratio in (0.5, 0.25, 0.73):
        inc = bm.sample_increment(rng, 0.8, 3, shape=(20,))
        l, r = bm.refine(inc, rng, ratio=ratio)
        assert np.isclose(l.dt + r.dt, inc.dt)
        back = bm.combine(l, r)
        np.testing.assert_allclose(back.w, inc.w, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(back.h, inc.h, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(back.k, inc.k, rtol=1e-13, atol=1e-15)


def test_bridge_matrices_match_conditioning_oracle():
    for ratio in (0.5, 0.25, 0.75):
        gain_o, cond_o = _conditional_from_kernel(ratio)
        a_hat, l_hat = bm.bridge_matrices(ratio)
        d_left = np.diag([ratio**0.5, ratio**1.5, ratio**2.5])
        gain = d_left @ a_hat  # parent scales are 1 on the unit interval
        cond = d_left @ (l_hat @ l_hat.T) @ d_left
        np.testing.assert_allclose(gain, gain_o, atol=1e-5 * np.max(np.abs(gain)))
        np.testing.assert_allclose(cond, cond_o, atol=1e-5 * np.max(np.abs(cond)))


def test_refine_left_marginal_zero_parent():
    # Conditional variance of the left coefficients given a parent pinned at
    # zero, against the kernel-quadrature oracle; 1e6 draws, 4 sigma for the
    # six simultaneous statistics.
    n = 1_000_000
    _, cond_o = _conditional_from_kernel(0.5)
    parent = bm.zero_increment(1.0, 1, shape=(n,))
    left, _ = bm.refine(parent, np.random.default_rng(108))
    lt = bm.to_time_integrals(left)
    for comp, var_o in zip((lt.w, lt.i1, lt.i2), np.diag(cond_o)):
        flat = comp.ravel()
        assert abs(np.mean(flat)) < 4.0 * np.sqrt(var_o / n)
        assert abs(np.var(flat) - var_o) < 4.0 * var_o * np.sqrt(2.0 / n)


def test_refine_left_mean_nonzero_parent():
    n = 400_000
    gain_o, cond_o = _conditional_from_kernel(0.5)
    xp = np.array([1.3, 0.4, 0.1])
    mean_o = gain_o @ xp
    parent = bm.from_time_integrals(
        bm.TimeIntegrals(
            1.0,
            np.full((n, 1), xp[0]),
            np.full((n, 1), xp[1]),
            np.full((n, 1), xp[2]),
        )
    )
    left, _ = bm.refine(parent, np.random.default_rng(109))
    lt = bm.to_time_integrals(left)
    for comp, mu, var in zip((lt.w, lt.i1, lt.i2), mean_o, np.diag(cond_o)):
        assert abs(np.mean(comp) - mu) < 4.0 * np.sqrt(var / n)


def test_refine_halfsplit_leftw_variance_frozen():
    # For an even split of a unit parent the conditional variance of the
    # left increment is exactly 1/16 (cross-checked by the oracle above).
    _, l_hat = bm.bridge_matrices(0.5)
    cond = l_hat @ l_hat.T
    assert abs(0.5 * cond[0, 0] - 1.0 / 16.0) < 1e-12


def test_refine_deterministic_under_identical_state():
    inc = bm.sample_increment(np.random.default_rng(110), 1.0, 3)
    l1, r1 = bm.refine(inc, np.random.default_rng(7))
    l2, r2 = bm.refine(inc, np.random.default_rng(7))
    assert np.array_equal(l1.w, l2.w) and np.array_equal(r1.k, r2.k)


def test_refine_rejects_m():
    inc = bm.sample_increment(np.random.default_rng(111), 1.0, 2, with_m=True)
    with pytest.raises(ValueError):
        bm.refine(inc, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# seed-addressed paths and trees


def test_tree_leaf_fold_reconstructs_root():
    tree = bm.DyadicBrownianTree(seed=42, d=3, horizon=2.0)
    root = tree.root()

    def leaves(inc, index, depth):
        if depth == 0:
            return [inc]
        l, r = tree.split(inc, index)
        return leaves(l, 2 * index, depth - 1) + leaves(r, 2 * index + 1, depth - 1)

    parts = leaves(root, 1, 6)
    assert len(parts) == 64
    fold = parts[0]
    for p in parts[1:]:
        fold = bm.combine(fold, p)
    np.testing.assert_allclose(fold.w, root.w, atol=1e-12, rtol=1e-12)
    np.testing.assert_allclose(fold.h, root.h, atol=1e-12, rtol=1e-12)
    np.testing.assert_allclose(fold.k, root.k, atol=1e-12, rtol=1e-12)


def test_tree_split_is_order_independent():
    tree = bm.DyadicBrownianTree(seed=5, d=2, horizon=1.0)
    root = tree.root()
    l, r = tree.split(root, 1)
    ll1, lr1 = tree.split(l, 2)
    rl1, rr1 = tree.split(r, 3)
    # same splits, opposite order
    rl2, rr2 = tree.split(r, 3)
    ll2, lr2 = tree.split(l, 2)
    for x, y in ((ll1, ll2), (lr1, lr2), (rl1, rl2), (rr1, rr2)):
        assert np.array_equal(x.w, y.w)
        assert np.array_equal(x.k, y.k)


def test_path_increments_reproducible():
    path = bm.BrownianPath(seed=9, d=4, shape=(6,))
    a = path.increment(3, 0.1)
    b = path.increment(3, 0.1)
    assert np.array_equal(a.w, b.w)
    c = path.increment(4, 0.1)
    assert not np.array_equal(a.w, c.w)


def test_path_halves_leave_root_unchanged():
    path = bm.BrownianPath(seed=9, d=4)
    plain = path.increment(2, 0.5)
    rich = path.increment(2, 0.5, with_halves=True)
    assert np.array_equal(plain.w, rich.w)
    assert np.array_equal(plain.k, rich.k)
    back = bm.combine(*rich.halves)
    np.testing.assert_allclose(back.w, rich.w, rtol=1e-13, atol=1e-15)

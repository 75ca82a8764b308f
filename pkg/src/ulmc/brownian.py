"""Brownian paths summarized by polynomial coefficients per interval.

Each interval of length ``dt`` carries a coefficient triple ``(w, h, k)``:
``w`` is the plain Brownian increment over the interval and ``h``, ``k`` are
the first two coefficients of the centred path expanded in shifted Legendre
polynomials, scaled so that per coordinate, independently,

    w ~ N(0, dt),    h ~ N(0, dt/12),    k ~ N(0, dt/720).

The triple is equivalent to the increment together with its running time
integrals,

    i1 = dt*w/2 + dt*h
    i2 = dt**2 * (w/6 + h/2 + k),

and in that form increments compose exactly across adjacent intervals.  A
coarse increment and its recursive refinement therefore describe one and the
same underlying path, which is what lets a fine reference solution and a
coarse solution be driven by identical noise.

An optional fourth coefficient ``m`` (variance ``dt/100800``) extends the
expansion one order further.  It can be sampled alongside the triple but no
consumer here needs it, and refinement does not condition on it.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "BrownianIncrement",
    "TimeIntegrals",
    "BrownianPath",
    "DyadicBrownianTree",
    "sample_increment",
    "zero_increment",
    "to_time_integrals",
    "from_time_integrals",
    "combine",
    "refine",
    "bridge_matrices",
    "keyed_generator",
]

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Coefficient variances on a unit interval.
_VAR_H = 1.0 / 12.0
_VAR_K = 1.0 / 720.0
_VAR_M = 1.0 / 100800.0

# Stream tags 0-3 are reserved by this module; see keyed_generator.
_STREAM_STEP = 0
_STREAM_STEP_HALF = 1
_STREAM_TREE_ROOT = 2
_STREAM_TREE_SPLIT = 3


def _as_coeff(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        raise ValueError(f"{name} must have a trailing coordinate axis, got a scalar")
    return arr


@dataclass(frozen=True, eq=False)
class BrownianIncrement:
    """Coefficient triple of one Brownian interval.

    ``w``, ``h`` and ``k`` have shape ``(..., d)``; leading axes are batch
    axes and every operation in this module broadcasts over them.  ``halves``
    optionally carries the two half-interval increments produced by
    :func:`refine`, for steppers that consume sub-interval noise.  Instances
    are immutable and safe to share across threads.
    """

    dt: float
    w: np.ndarray
    h: np.ndarray
    k: np.ndarray
    m: np.ndarray | None = None
    halves: tuple["BrownianIncrement", "BrownianIncrement"] | None = field(
        default=None, repr=False
    )

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "dt", float(self.dt))
        for name in ("w", "h", "k"):
            object.__setattr__(self, name, _as_coeff(name, getattr(self, name)))
        if self.m is not None:
            object.__setattr__(self, "m", _as_coeff("m", self.m))
        shapes = {self.w.shape, self.h.shape, self.k.shape}
        if self.m is not None:
            shapes.add(self.m.shape)
        if len(shapes) != 1:
            raise ValueError(f"coefficient shapes disagree: {sorted(shapes)}")

    @property
    def d(self) -> int:
        return self.w.shape[-1]


@dataclass(frozen=True, eq=False)
class TimeIntegrals:
    """Increment plus first and second running time integrals of an interval."""

    dt: float
    w: np.ndarray
    i1: np.ndarray
    i2: np.ndarray

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "dt", float(self.dt))
        for name in ("w", "i1", "i2"):
            object.__setattr__(self, name, _as_coeff(name, getattr(self, name)))
        if not (self.w.shape == self.i1.shape == self.i2.shape):
            raise ValueError("w, i1, i2 shapes disagree")


def sample_increment(
    rng: np.random.Generator,
    dt: float,
    d: int,
    *,
    shape: tuple[int, ...] = (),
    with_m: bool = False,
) -> BrownianIncrement:
    """Draw the coefficients of one interval of length ``dt``.

    Every coordinate is independent, with w ~ N(0, dt), h ~ N(0, dt/12) and
    k ~ N(0, dt/720); ``with_m`` also draws the next coefficient with
    variance dt/100800.  ``shape`` prepends batch axes to the ``(d,)``
    coefficient vectors, drawn in one block so the generator state advances
    deterministically.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if d < 1:
        raise ValueError(f"dimension must be at least 1, got {d}")
    z = rng.standard_normal((4 if with_m else 3, *shape, d))
    w = np.sqrt(dt) * z[0]
    h = np.sqrt(dt * _VAR_H) * z[1]
    k = np.sqrt(dt * _VAR_K) * z[2]
    m = np.sqrt(dt * _VAR_M) * z[3] if with_m else None
    return BrownianIncrement(dt, w, h, k, m)


def zero_increment(dt: float, d: int, *, shape: tuple[int, ...] = ()) -> BrownianIncrement:
    """Increment of a path that is identically zero on the interval."""
    z = np.zeros((*shape, d))
    return BrownianIncrement(dt, z, z.copy(), z.copy())


def to_time_integrals(inc: BrownianIncrement) -> TimeIntegrals:
    """Map (w, h, k) to the increment's running time integrals."""
    dt = inc.dt
    i1 = dt * (0.5 * inc.w + inc.h)
    i2 = dt * dt * (inc.w / 6.0 + 0.5 * inc.h + inc.k)
    return TimeIntegrals(dt, inc.w, i1, i2)


def from_time_integrals(ti: TimeIntegrals) -> BrownianIncrement:
    """Invert :func:`to_time_integrals`."""
    dt = ti.dt
    h = ti.i1 / dt - 0.5 * ti.w
    k = ti.i2 / (dt * dt) - ti.w / 6.0 - 0.5 * h
    return BrownianIncrement(dt, ti.w, h, k)


def combine(left: BrownianIncrement, right: BrownianIncrement) -> BrownianIncrement:
    """Compose two adjacent increments into one over the union interval.

    Exact and associative: the time integrals of the union are linear in
    those of the parts.  The result carries no ``m`` and no ``halves``.
    """
    if left.w.shape != right.w.shape:
        raise ValueError(
            f"cannot combine increments of shapes {left.w.shape} and {right.w.shape}"
        )
    a = to_time_integrals(left)
    b = to_time_integrals(right)
    dt_r = right.dt
    w = a.w + b.w
    i1 = a.i1 + b.i1 + dt_r * a.w
    i2 = a.i2 + b.i2 + dt_r * a.i1 + 0.5 * dt_r * dt_r * a.w
    return from_time_integrals(TimeIntegrals(left.dt + right.dt, w, i1, i2))


# Covariance of (w, i1, i2) on a unit interval.
_UNIT_COV = np.array(
    [
        [1.0, 1.0 / 2.0, 1.0 / 6.0],
        [1.0 / 2.0, 1.0 / 3.0, 1.0 / 8.0],
        [1.0 / 6.0, 1.0 / 8.0, 1.0 / 20.0],
    ]
)


@functools.lru_cache(maxsize=None)
def bridge_matrices(ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Conditional map for the left part of an interval split, scale-free.

    For a split of ``[0, s]`` at ``a = ratio*s``, write the normalized
    vector of an interval of length ``t`` as x̂ = (w/t^0.5, i1/t^1.5,
    i2/t^2.5).  Then x̂_left | x̂_parent ~ N(A x̂_parent, L Lᵀ) with (A, L)
    independent of ``s``; this returns that pair.  Cross-covariances come
    from integrating the Brownian kernel min(r, t) over the two intervals.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must lie strictly inside (0, 1), got {ratio}")
    a = float(ratio)
    # Cov((w_L, i1_L, i2_L), (w, i1, i2)) for a parent of unit length.
    cov_lp = np.array(
        [
            [a, a - a**2 / 2, a**2 / 2 - a**3 / 3 + a * (1 - a) ** 2 / 2],
            [a**2 / 2, a**2 / 2 - a**3 / 6, a**2 / 4 - a**3 / 6 + a**4 / 24],
            [a**3 / 6, a**3 / 6 - a**4 / 24, a**3 / 12 - a**4 / 24 + a**5 / 120],
        ]
    )
    d_left = np.array([a**0.5, a**1.5, a**2.5])
    cross = cov_lp / d_left[:, None]
    a_mat = np.linalg.solve(_UNIT_COV, cross.T).T
    cond = _UNIT_COV - a_mat @ cross.T
    cond = 0.5 * (cond + cond.T)
    try:
        l_mat = np.linalg.cholesky(cond)
    except np.linalg.LinAlgError:
        # Extreme ratios leave the conditional covariance barely positive;
        # fall back to a symmetric square root with clipped spectrum.
        vals, vecs = np.linalg.eigh(cond)
        l_mat = vecs * np.sqrt(np.clip(vals, 0.0, None))
    a_mat.setflags(write=False)
    l_mat.setflags(write=False)
    return a_mat, l_mat


def refine(
    inc: BrownianIncrement,
    rng: np.random.Generator,
    *,
    ratio: float = 0.5,
) -> tuple[BrownianIncrement, BrownianIncrement]:
    """Split one interval into two that compose back to it exactly.

    The left part is drawn from the exact conditional Gaussian law of its
    (w, i1, i2) given the parent's, and the right part is then fixed by the
    composition rule, so ``combine(left, right)`` reproduces ``inc`` up to
    rounding.  ``ratio`` is the fraction of ``inc.dt`` given to the left
    part.
    """
    if inc.m is not None:
        raise ValueError("refinement of an increment carrying m is not supported")
    a_mat, l_mat = bridge_matrices(ratio)
    s = inc.dt
    dt_l = ratio * s
    dt_r = s - dt_l
    ti = to_time_integrals(inc)
    xp = np.stack([ti.w / s**0.5, ti.i1 / s**1.5, ti.i2 / s**2.5])
    z = rng.standard_normal(xp.shape)
    xl = np.tensordot(a_mat, xp, axes=1) + np.tensordot(l_mat, z, axes=1)
    w_l = xl[0] * dt_l**0.5
    i1_l = xl[1] * dt_l**1.5
    i2_l = xl[2] * dt_l**2.5
    left = from_time_integrals(TimeIntegrals(dt_l, w_l, i1_l, i2_l))
    w_r = ti.w - w_l
    i1_r = ti.i1 - i1_l - dt_r * w_l
    i2_r = ti.i2 - i2_l - dt_r * i1_l - 0.5 * dt_r * dt_r * w_l
    right = from_time_integrals(TimeIntegrals(dt_r, w_r, i1_r, i2_r))
    return left, right


def keyed_generator(seed: int, stream: int, *index: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream, index).

    Output depends only on the key, never on creation order, which makes
    dyadic refinement and parallel chains order-independent.  Stream tags
    0-3 are reserved by this module; other modules should key their draws
    with tags >= 8.
    """
    ss = np.random.SeedSequence(
        entropy=int(seed) & _MASK64, spawn_key=(int(stream), *map(int, index))
    )
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class BrownianPath:
    """Seed-addressed noise for a stepwise simulation.

    The increment of step ``i`` depends only on ``(seed, i)`` and the call
    arguments, never on access order, so restarted or parallel consumers see
    identical noise.  ``shape`` prepends batch axes, giving independent paths
    that share one seed.
    """

    seed: int
    d: int
    shape: tuple[int, ...] = ()

    def increment(
        self,
        index: int,
        dt: float,
        *,
        with_halves: bool = False,
        with_m: bool = False,
    ) -> BrownianIncrement:
        g = keyed_generator(self.seed, _STREAM_STEP, index)
        inc = sample_increment(g, dt, self.d, shape=self.shape, with_m=with_m)
        if with_halves:
            gh = keyed_generator(self.seed, _STREAM_STEP_HALF, index)
            inc = replace(inc, halves=refine(inc, gh))
        return inc


@dataclass(frozen=True)
class DyadicBrownianTree:
    """Dyadic refinement tree of one path over ``[0, horizon]``.

    Nodes are heap-indexed: the root interval is node 1 and node ``i`` splits
    into ``2*i`` and ``2*i + 1``.  The root draw and the bridge noise of each
    split are keyed by the node index alone, so any traversal order (or a
    partial traversal) reconstructs the same path.
    """

    seed: int
    d: int
    horizon: float
    shape: tuple[int, ...] = ()

    def root(self, *, with_m: bool = False) -> BrownianIncrement:
        g = keyed_generator(self.seed, _STREAM_TREE_ROOT, 1)
        return sample_increment(g, self.horizon, self.d, shape=self.shape, with_m=with_m)

    def split(
        self, inc: BrownianIncrement, index: int
    ) -> tuple[BrownianIncrement, BrownianIncrement]:
        """Split node ``index`` (holding ``inc``) into its two children."""
        g = keyed_generator(self.seed, _STREAM_TREE_SPLIT, index)
        return refine(inc, g)

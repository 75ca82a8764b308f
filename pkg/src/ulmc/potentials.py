"""Scalar potentials with gradient oracles and smoothness metadata.

A potential here is any object exposing ``value(x)``, ``gradient(x)`` and a
``meta`` attribute carrying its convexity and smoothness constants.  Both
``x`` arguments accept arbitrary leading batch axes over the trailing
coordinate axis.  Two concrete families are provided: diagonal quadratics
(whose stationary law is an exact Gaussian, convenient for calibration) and
the Bayesian logistic-regression posterior

    f(theta, b) = sum_i log(1 + exp(-y_i (<theta, x_i> + b)))
                  + ||theta||^2 / (4 V) + b^2 / 2,

where V is the pooled variance of the feature entries, corresponding to the
prior theta ~ N(0, I/(2V)), b ~ N(0, 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PotentialMeta",
    "QuadraticPotential",
    "LogisticDataset",
    "LogisticPosterior",
    "GradientCounter",
    "quadratic_gradient",
    "logistic_potential_gradient",
    "load_dataset",
    "sample_prior",
    "synthetic_dataset",
]


@dataclass(frozen=True)
class PotentialMeta:
    """Dimension plus convexity/smoothness constants of a potential.

    ``m`` is the strong-convexity constant and ``M1`` the gradient Lipschitz
    constant; ``M2`` and ``M3`` bound the second and third derivative
    tensors when known.
    """

    d: int
    m: float
    M1: float
    M2: float | None = None
    M3: float | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be at least 1, got {self.d}")
        if self.m < 0 or self.M1 <= 0:
            raise ValueError("need m >= 0 and M1 > 0")
        if self.m > self.M1 + 1e-12:
            raise ValueError(f"m = {self.m} exceeds M1 = {self.M1}")


class QuadraticPotential:
    """f(x) = 1/2 sum_j lam_j (x_j - c_j)^2 with per-coordinate curvatures."""

    def __init__(self, curvatures, center=0.0, *, d: int | None = None):
        lam = np.asarray(curvatures, dtype=float)
        if lam.ndim == 0:
            if d is None:
                raise ValueError("scalar curvature needs an explicit dimension d")
            lam = np.full(d, float(lam))
        if lam.ndim != 1 or np.any(lam <= 0):
            raise ValueError("curvatures must be a vector of positives")
        self.curvatures = lam
        self.center = np.broadcast_to(np.asarray(center, dtype=float), lam.shape).copy()
        self.meta = PotentialMeta(
            d=lam.size, m=float(lam.min()), M1=float(lam.max()), M2=0.0, M3=0.0
        )

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(self.curvatures * (x - self.center) ** 2, axis=-1)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.curvatures * (x - self.center)


def quadratic_gradient(p: QuadraticPotential, x) -> np.ndarray:
    """Gradient lam ⊙ (x - c) of a diagonal quadratic."""
    return p.gradient(x)


@dataclass(frozen=True)
class LogisticDataset:
    """Binary-labelled design matrix for the logistic posterior.

    ``feature_variance`` is the pooled population variance over all
    ``m_rows * d_feat`` feature entries; pass None to have it computed.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_variance: float | None = None

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=float)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ValueError("features must be a nonempty (m_rows, d_feat) matrix")
        if labs.shape != (feats.shape[0],):
            raise ValueError("labels must be one value per feature row")
        if not np.all(np.isin(labs, (-1.0, 1.0))):
            bad = np.unique(labs[~np.isin(labs, (-1.0, 1.0))])
            raise ValueError(f"labels must lie in {{-1, +1}}, found {bad}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        if self.feature_variance is None:
            object.__setattr__(self, "feature_variance", float(np.var(feats)))
        if not self.feature_variance > 0:
            raise ValueError("feature variance must be positive")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def d_feat(self) -> int:
        return self.features.shape[1]


def _split_params(dataset: LogisticDataset, params) -> tuple[np.ndarray, np.ndarray]:
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != dataset.d_feat + 1:
        raise ValueError(
            f"parameter vector must have length {dataset.d_feat + 1} "
            f"(weights plus intercept), got {params.shape[-1]}"
        )
    return params[..., :-1], params[..., -1]


def logistic_potential_value(dataset: LogisticDataset, params) -> np.ndarray:
    """Negative log-posterior of the logistic model, up to a constant."""
    theta, b = _split_params(dataset, params)
    logits = theta @ dataset.features.T + b[..., None]
    z = dataset.labels * logits
    nll = np.sum(np.logaddexp(0.0, -z), axis=-1)
    prior = np.sum(theta**2, axis=-1) / (4.0 * dataset.feature_variance) + 0.5 * b**2
    return nll + prior


def logistic_potential_gradient(dataset: LogisticDataset, params) -> np.ndarray:
    """Gradient of :func:`logistic_potential_value` in (theta, b).

    The sigmoid factor sigma(-z) is evaluated as exp(-softplus(z)), which is
    finite and accurate for logits of either sign and any magnitude.
    """
    theta, b = _split_params(dataset, params)
    logits = theta @ dataset.features.T + b[..., None]
    z = dataset.labels * logits
    coef = np.exp(-np.logaddexp(0.0, z)) * dataset.labels  # sigma(-z) * y
    grad_theta = -coef @ dataset.features + theta / (2.0 * dataset.feature_variance)
    grad_b = -np.sum(coef, axis=-1) + b
    return np.concatenate([grad_theta, grad_b[..., None]], axis=-1)


class LogisticPosterior:
    """Potential view of a logistic dataset, with smoothness metadata.

    The strong-convexity constant comes from the prior alone; the gradient
    Lipschitz constant adds the worst-case likelihood curvature, bounded by
    one quarter of the top eigenvalue of the Gram matrix of the rows with an
    appended intercept column.
    """

    def __init__(self, dataset: LogisticDataset):
        self.dataset = dataset
        v = dataset.feature_variance
        tilde = np.hstack([dataset.features, np.ones((dataset.n_rows, 1))])
        gram_top = float(np.linalg.eigvalsh(tilde.T @ tilde)[-1])
        prior_max = max(1.0 / (2.0 * v), 1.0)
        self.meta = PotentialMeta(
            d=dataset.d_feat + 1,
            m=min(1.0 / (2.0 * v), 1.0),
            M1=0.25 * gram_top + prior_max,
        )

    def value(self, params) -> np.ndarray:
        return logistic_potential_value(self.dataset, params)

    def gradient(self, params) -> np.ndarray:
        return logistic_potential_gradient(self.dataset, params)


class GradientCounter:
    """Wrap a potential and count gradient evaluations per chain.

    Each ``gradient`` call counts once no matter how many chains it is
    vectorized over, matching the per-chain cost model of the samplers.
    """

    def __init__(self, potential):
        self.potential = potential
        self.meta = potential.meta
        self.calls = 0

    def value(self, x):
        return self.potential.value(x)

    def gradient(self, x):
        self.calls += 1
        return self.potential.gradient(x)


def load_dataset(
    path,
    *,
    label_col: int = 0,
    delimiter: str | None = None,
    standardize: bool = False,
    skip_header: int = 0,
) -> LogisticDataset:
    """Read a delimited numeric file into a :class:`LogisticDataset`.

    ``delimiter`` None sniffs between comma and whitespace from the first
    data line.  The column ``label_col`` holds labels in {0, 1} (mapped to
    {-1, +1}) or already in {-1, +1}.  ``standardize`` rescales each feature
    column to zero mean and unit population variance before the pooled
    feature variance is computed; a constant column is an error then.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if delimiter is None:
        with open(path) as fh:
            for _ in range(skip_header):
                fh.readline()
            first = fh.readline()
        delimiter = "," if "," in first else None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty input warns before we raise
            raw = np.loadtxt(path, delimiter=delimiter, skiprows=skip_header, ndmin=2)
    except Exception as exc:
        raise ValueError(f"could not parse dataset file {path}: {exc}") from exc
    if raw.size == 0:
        raise ValueError(f"dataset file {path} is empty")
    if raw.shape[1] < 2:
        raise ValueError("need at least one feature column besides the labels")
    if not (-raw.shape[1] <= label_col < raw.shape[1]):
        raise ValueError(f"label column {label_col} out of range for {raw.shape[1]} columns")

    labels = raw[:, label_col]
    features = np.delete(raw, label_col % raw.shape[1], axis=1)
    values = set(np.unique(labels))
    if values <= {0.0, 1.0}:
        labels = 2.0 * labels - 1.0
    elif not values <= {-1.0, 1.0}:
        raise ValueError(
            f"labels must lie in {{0,1}} or {{-1,+1}}, found {sorted(values)}"
        )

    if standardize:
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        dead = np.nonzero(std == 0)[0]
        if dead.size:
            raise ValueError(f"cannot standardize constant feature column(s) {dead.tolist()}")
        features = (features - mean) / std
    return LogisticDataset(features, labels)


def sample_prior(
    dataset: LogisticDataset, rng: np.random.Generator, *, shape: tuple[int, ...] = ()
) -> np.ndarray:
    """Draw (theta, b) from the prior theta ~ N(0, I/(2V)), b ~ N(0, 1)."""
    z = rng.standard_normal((*shape, dataset.d_feat + 1))
    out = z.copy()
    out[..., :-1] *= 1.0 / np.sqrt(2.0 * dataset.feature_variance)
    return out


def synthetic_dataset(
    rows: int = 200,
    d_feat: int = 4,
    *,
    seed: int = 2024,
    margin: float = 1.0,
    flip_fraction: float = 0.0,
) -> LogisticDataset:
    """Deterministic synthetic binary-classification data.

    Rows are standard-normal feature vectors kept only when the score along
    a fixed teacher direction clears ``margin`` (in score standard
    deviations), labelled by the score's sign; ``flip_fraction`` then flips
    that fraction of labels.  Larger margins give a flatter, better
    conditioned posterior.
    """
    if rows < 1 or d_feat < 1:
        raise ValueError("need at least one row and one feature")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    teacher = rng.standard_normal(d_feat)
    teacher /= np.linalg.norm(teacher)
    feats = np.empty((0, d_feat))
    while feats.shape[0] < rows:
        cand = rng.standard_normal((4 * rows, d_feat))
        score = cand @ teacher
        keep = np.abs(score) >= margin
        feats = np.vstack([feats, cand[keep]])
    feats = feats[:rows]
    labels = np.sign(feats @ teacher)
    if flip_fraction > 0:
        n_flip = int(round(flip_fraction * rows))
        if n_flip:
            labels[rng.choice(rows, size=n_flip, replace=False)] *= -1.0
    return LogisticDataset(feats, labels)

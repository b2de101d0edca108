"""Distribution-based balancing (DBB).

The learning phase fits one distribution per (class, feature) pair; the
sampling phase throws away the training rows and draws ``b`` fresh rows per
class, each feature sampled independently from its class-conditional
distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .data import DataError, EncodedDataset

__all__ = ["DbbModel", "DistributionBalancer", "balance", "poisson_sample"]

GAUSSIAN = "gaussian"
POISSON = "poisson"
_FAMILIES = (GAUSSIAN, POISSON)
_POISSON_NORMAL_CUTOFF = 30.0


@dataclass(frozen=True)
class DbbModel:
    """Per-class, per-feature distribution parameters.

    ``family[k, i]`` is True where feature ``i`` of class ``k`` is Poisson
    (``loc`` then holds lambda); elsewhere Gaussian with mean ``loc`` and
    standard deviation ``scale``.
    """

    classes: np.ndarray
    loc: np.ndarray
    scale: np.ndarray
    poisson: np.ndarray

    @property
    def n_features(self) -> int:
        return self.loc.shape[1]


def poisson_sample(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Knuth's multiplication method below lambda=30, rounded normal above."""
    if lam >= _POISSON_NORMAL_CUTOFF:
        draws = np.rint(rng.normal(lam, np.sqrt(lam), size=size))
        return np.maximum(draws, 0.0)
    limit = np.exp(-lam)
    out = np.empty(size)
    for n in range(size):
        k, p = 0, rng.random()
        while p > limit:
            k += 1
            p *= rng.random()
        out[n] = k
    return out


class DistributionBalancer(BaseEstimator):
    """Regenerate a fully class-balanced training set by sampling.

    Parameters
    ----------
    b : int or "max", default=30
        Rows generated per class. ``"max"`` uses the largest class count seen
        in ``fit``.
    family : {"gaussian", "poisson"}, default="gaussian"
        Poisson is used only for (class, feature) pairs whose observed values
        are all nonnegative; other pairs fall back to Gaussian.
    sigma_floor : float, default=1e-9
        Lower bound on every Gaussian standard deviation.
    onehot_groups : sequence of column-index tuples, optional
        Columns forming one-hot groups; each generated row is snapped to the
        argmax of its group.
    binary_columns : sequence of int, optional
        0/1 columns; generated values are rounded to the nearer of 0 and 1.
    random_state : int, default=0
    """

    def __init__(
        self,
        b=30,
        family=GAUSSIAN,
        sigma_floor=1e-9,
        onehot_groups=(),
        binary_columns=(),
        random_state=0,
    ):
        self.b = b
        self.family = family
        self.sigma_floor = sigma_floor
        self.onehot_groups = onehot_groups
        self.binary_columns = binary_columns
        self.random_state = random_state

    def _check_params(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        if self.b != "max" and (int(self.b) != self.b or self.b < 1):
            raise ValueError("b must be a positive integer or 'max'")

    def fit(self, X, y, classes=None):
        """Learn the distribution of every feature within every class.

        ``classes`` lists the labels to model; each must have at least one row.
        It defaults to the labels present in ``y``.
        """
        self._check_params()
        X = check_array(X, dtype=float, ensure_min_samples=1)
        y = column_or_1d(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have inconsistent numbers of rows")
        classes = np.unique(y) if classes is None else np.asarray(classes)
        r = X.shape[1]
        loc = np.zeros((len(classes), r))
        scale = np.zeros((len(classes), r))
        poisson = np.zeros((len(classes), r), dtype=bool)
        counts = []
        for k, c in enumerate(classes):
            rows = X[y == c]
            if rows.shape[0] == 0:
                raise DataError(f"class {c!r} has zero instances")
            counts.append(rows.shape[0])
            mean = rows.mean(axis=0)
            std = rows.std(axis=0, ddof=1) if rows.shape[0] > 1 else np.zeros(r)
            loc[k] = mean
            scale[k] = np.maximum(std, self.sigma_floor)
            if self.family == POISSON:
                poisson[k] = (rows >= 0).all(axis=0)
                loc[k] = np.where(poisson[k], np.maximum(mean, 0.0), mean)
        self.model_ = DbbModel(classes, loc, scale, poisson)
        self.classes_ = classes
        self.class_counts_ = np.array(counts)
        self.n_features_in_ = r
        self.n_per_class_ = int(max(counts)) if self.b == "max" else int(self.b)
        return self

    def sample(self):
        """Draw ``n_per_class_`` rows for every class; deterministic per seed."""
        check_is_fitted(self, "model_")
        m = self.model_
        b = self.n_per_class_
        rng = np.random.default_rng(self.random_state)
        blocks, labels = [], []
        for k, c in enumerate(m.classes):
            rows = np.empty((b, m.n_features))
            gauss = ~m.poisson[k]
            rows[:, gauss] = rng.normal(m.loc[k, gauss], m.scale[k, gauss], size=(b, int(gauss.sum())))
            for i in np.flatnonzero(m.poisson[k]):
                rows[:, i] = poisson_sample(rng, m.loc[k, i], b)
            blocks.append(rows)
            labels.append(np.full(b, c))
        X_new = np.vstack(blocks)
        self._repair(X_new)
        return X_new, np.concatenate(labels)

    def _repair(self, X_new):
        for group in self.onehot_groups:
            cols = list(group)
            hot = np.argmax(X_new[:, cols], axis=1)
            X_new[:, cols] = np.eye(len(cols))[hot]
        for col in self.binary_columns:
            X_new[:, col] = (X_new[:, col] >= 0.5).astype(float)

    def fit_resample(self, X, y, classes=None):
        return self.fit(X, y, classes=classes).sample()


def balance(d: EncodedDataset, b=30, family=GAUSSIAN, sigma_floor=1e-9, seed=0) -> EncodedDataset:
    """Fit on ``d`` and return a fully regenerated, balanced copy.

    Classes absent from ``d`` are left out of the output.
    """
    if d.n_rows == 0:
        raise DataError("cannot balance an empty dataset")
    sampler = DistributionBalancer(
        b=b,
        family=family,
        sigma_floor=sigma_floor,
        onehot_groups=d.onehot_groups,
        binary_columns=d.binary_columns,
        random_state=seed,
    )
    X_new, y_new = sampler.fit_resample(d.matrix, d.labels)
    return d.with_rows(X_new, y_new)

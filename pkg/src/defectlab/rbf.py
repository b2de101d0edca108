"""Gaussian radial-basis-function network classifier.

Hidden units are Gaussian kernels; the output layer is linear in the kernel
activations plus a bias and is solved in closed form (ridge or minimum-norm
least squares). Two training modes:

* ``"fixed"``: K-means picks ``n_centers`` centers.
* ``"incremental"``: start bias-only and repeatedly add a neuron on the
  training row with the largest output error until the mean error drops to
  ``max_error``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "RbfNetwork",
    "RBFNetworkClassifier",
    "kmeans",
    "solve_output_weights",
    "fast_sigmoid",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
_WIDTH_FLOOR = 1e-9
_MODES = ("fixed", "incremental")
_ACTIVATIONS = ("linear", "logistic_approx")


def fast_sigmoid(z):
    """Rational logistic approximation ``0.5 * z / (1 + |z|) + 0.5``."""
    z = np.asarray(z, dtype=float)
    return 0.5 * (z / (1.0 + np.abs(z))) + 0.5


def _sq_dists(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _lloyd(X, centers, iters):
    k = centers.shape[0]
    assign = np.argmin(_sq_dists(X, centers), axis=1)
    for _ in range(iters):
        for j in range(k):
            members = assign == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                own = ((X - centers[assign]) ** 2).sum(1)
                far = int(np.argmax(own))
                centers[j] = X[far]
                assign[far] = j
        new_assign = np.argmin(_sq_dists(X, centers), axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers, assign


def kmeans(points, k, iters=100, seed=0, n_init=10):
    """Lloyd's algorithm, best of ``n_init`` seeded restarts by WCSS.

    Each restart starts from ``k`` distinct rows drawn uniformly without
    replacement. An emptied cluster is re-seeded at the point farthest from
    its current center. Returns ``(centers, assignments)``.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if n_init < 1:
        raise ValueError("n_init must be positive")
    # draw from distinct rows when there are enough of them
    pool = np.unique(X, axis=0, return_index=True)[1]
    pool = np.sort(pool) if pool.size >= k else np.arange(n)
    rng = np.random.default_rng(seed)
    best, best_wcss = None, np.inf
    for _ in range(n_init):
        start = X[rng.choice(pool, size=k, replace=False)].copy()
        centers, assign = _lloyd(X, start, iters)
        wcss = float(((X - centers[assign]) ** 2).sum())
        if wcss < best_wcss:
            best, best_wcss = (centers, assign), wcss
    return best


def solve_output_weights(Phi, targets, ridge=0.0):
    """Minimise ``||Phi W - T||^2 + ridge * ||W||^2``.

    ``ridge > 0`` solves the regularised normal equations; ``ridge == 0``
    returns the minimum-norm least-squares solution (SVD based), so
    rank-deficient designs are fine. The bias column is penalised like any
    other.
    """
    Phi = np.asarray(Phi, dtype=float)
    T = np.asarray(targets, dtype=float)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if ridge == 0:
        return np.linalg.lstsq(Phi, T, rcond=None)[0]
    A = Phi.T @ Phi
    A[np.diag_indices_from(A)] += ridge
    return np.linalg.solve(A, Phi.T @ T)


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    """Trained network state. ``weights`` has one row per center plus a final bias row."""

    centers: np.ndarray
    widths: np.ndarray
    weights: np.ndarray
    classes: np.ndarray
    output_activation: str = "logistic_approx"

    def __post_init__(self):
        if self.centers.shape[0] != self.widths.shape[0]:
            raise ValueError("centers and widths differ in length")
        if self.weights.shape != (self.centers.shape[0] + 1, len(self.classes)):
            raise ValueError("weight matrix shape inconsistent with centers/classes")
        if np.any(self.widths <= 0):
            raise ValueError("widths must be positive")

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def activations(self, X) -> np.ndarray:
        """Kernel activations with a trailing constant-1 bias column."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_centers and X.shape[1] != self.centers.shape[1]:
            raise ValueError(
                f"expected {self.centers.shape[1]} features, got {X.shape[1]}"
            )
        if self.n_centers == 0:
            return np.ones((X.shape[0], 1))
        phi = np.exp(-_sq_dists(X, self.centers) / (2.0 * self.widths**2))
        return np.hstack([phi, np.ones((X.shape[0], 1))])

    def raw_output(self, X) -> np.ndarray:
        return self.activations(X) @ self.weights

    def scores(self, X) -> np.ndarray:
        raw = self.raw_output(X)
        return fast_sigmoid(raw) if self.output_activation == "logistic_approx" else raw

    def predict(self, X) -> np.ndarray:
        # np.argmax returns the first maximum: ties go to the lowest class index
        return self.classes[np.argmax(self.scores(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": "defectlab.rbf",
            "version": FORMAT_VERSION,
            "n_features": int(self.centers.shape[1]),
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
            "weights": self.weights.tolist(),
            "classes": self.classes.tolist(),
            "activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RbfNetwork":
        if doc.get("format") != "defectlab.rbf":
            raise ValueError("not a serialized RBF network")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        weights = np.array(doc["weights"], dtype=float)
        n_centers = weights.shape[0] - 1
        centers = np.array(doc["centers"], dtype=float).reshape(n_centers, int(doc["n_features"]))
        return cls(
            centers=centers,
            widths=np.array(doc["widths"], dtype=float).reshape(n_centers),
            weights=weights,
            classes=np.array(doc["classes"]),
            output_activation=doc["activation"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RbfNetwork":
        return cls.from_dict(json.loads(text))


def _auto_widths(X, centers, assign):
    k = centers.shape[0]
    if k == 1:
        sigma = np.sqrt(((X - centers[0]) ** 2).sum(1)).mean()
    else:
        sigma = np.sqrt(_sq_dists(centers, centers).max()) / np.sqrt(2.0 * k)
    return np.full(k, max(sigma, _WIDTH_FLOOR))


class RBFNetworkClassifier(ClassifierMixin, BaseEstimator):
    """Gaussian RBF network with a closed-form output layer.

    Parameters
    ----------
    mode : {"fixed", "incremental"}, default="fixed"
    n_centers : int, default=1
        Hidden units for ``mode="fixed"``.
    width : float or "auto", default="auto"
        Kernel width. ``"auto"`` uses ``d_max / sqrt(2 k)`` over the K-means
        centers, or the mean point-to-center distance when ``k == 1``.
        Incremental mode needs a numeric width; ``"auto"`` there means 1.0.
    ridge : float, default=1e-8
    max_error : float, default=1e-2
        Incremental stop threshold on the mean per-row squared error.
    max_neurons : int, default=100
    output_activation : {"linear", "logistic_approx"}, default="logistic_approx"
    kmeans_iters : int, default=100
    random_state : int, default=0
    """

    def __init__(
        self,
        mode="fixed",
        n_centers=1,
        width="auto",
        ridge=1e-8,
        max_error=1e-2,
        max_neurons=100,
        output_activation="logistic_approx",
        kmeans_iters=100,
        random_state=0,
    ):
        self.mode = mode
        self.n_centers = n_centers
        self.width = width
        self.ridge = ridge
        self.max_error = max_error
        self.max_neurons = max_neurons
        self.output_activation = output_activation
        self.kmeans_iters = kmeans_iters
        self.random_state = random_state

    def _check_params(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.output_activation not in _ACTIVATIONS:
            raise ValueError(f"output_activation must be one of {_ACTIVATIONS}")
        if self.width != "auto" and not float(self.width) > 0:
            raise ValueError("width must be positive or 'auto'")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        if not self.max_error > 0:
            raise ValueError("max_error must be positive")
        if self.max_neurons < 1 or self.n_centers < 1 or self.kmeans_iters < 1:
            raise ValueError("n_centers, max_neurons and kmeans_iters must be positive")

    def fit(self, X, y):
        self._check_params()
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        T = np.eye(len(self.classes_))[y_idx]
        if self.mode == "fixed":
            self.network_ = self._fit_fixed(X, T)
        else:
            self.network_ = self._fit_incremental(X, T)
        return self

    def _fit_fixed(self, X, T):
        k = int(self.n_centers)
        if k > X.shape[0]:
            raise ValueError(f"n_centers={k} exceeds the {X.shape[0]} training rows")
        centers, assign = kmeans(X, k, self.kmeans_iters, self.random_state)
        if self.width == "auto":
            widths = _auto_widths(X, centers, assign)
        else:
            widths = np.full(k, float(self.width))
        net = RbfNetwork(centers, widths, np.zeros((k + 1, T.shape[1])), self.classes_, self.output_activation)
        W = solve_output_weights(net.activations(X), T, self.ridge)
        return RbfNetwork(centers, widths, W, self.classes_, self.output_activation)

    def _fit_incremental(self, X, T):
        width = 1.0 if self.width == "auto" else float(self.width)
        n = X.shape[0]
        used = np.zeros(n, dtype=bool)
        centers = np.empty((0, X.shape[1]))
        ones = np.ones((n, 1))
        W = solve_output_weights(ones, T, self.ridge)
        net = RbfNetwork(centers, np.empty(0), W, self.classes_, self.output_activation)
        prev_obj, prev_err = self._objective(ones, W, T)
        history = []
        while True:
            row_err = ((net.raw_output(X) - T) ** 2).sum(1)
            row_err[used] = -np.inf
            i = int(np.argmax(row_err))
            used[i] = True
            centers = np.vstack([centers, X[i]])
            widths = np.full(centers.shape[0], width)
            Phi = np.exp(-_sq_dists(X, centers) / (2.0 * width**2))
            Phi = np.hstack([Phi, ones])
            W = solve_output_weights(Phi, T, self.ridge)
            obj, net_error = self._objective(Phi, W, T)
            if obj > prev_obj:
                # Near-singular design: the fresh solve lost to the previous
                # weights. A zero weight on the new unit reproduces the
                # previous network exactly, so keep that instead.
                W = np.insert(net.weights, centers.shape[0] - 1, 0.0, axis=0)
                obj, net_error = prev_obj, prev_err
            net = RbfNetwork(centers, widths, W, self.classes_, self.output_activation)
            prev_obj, prev_err = obj, net_error
            history.append(net_error)
            if net_error <= self.max_error or centers.shape[0] >= self.max_neurons or used.all():
                break
        self.net_error_history_ = np.array(history)
        self.net_error_ = history[-1]
        return net

    def _objective(self, Phi, W, T):
        """Penalised training loss and the mean per-row squared error."""
        sq = ((Phi @ W - T) ** 2).sum(1)
        return float(sq.sum() + self.ridge * (W**2).sum()), float(sq.mean())

    def _validate(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def activations(self, X):
        return self.network_.activations(self._validate(X))

    def decision_function(self, X):
        """Per-class scores after the output activation."""
        return self.network_.scores(self._validate(X))

    def predict(self, X):
        return self.network_.predict(self._validate(X))

    def save(self, path):
        check_is_fitted(self, "network_")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.network_.to_json())

    @classmethod
    def from_network(cls, net: RbfNetwork) -> "RBFNetworkClassifier":
        est = cls(n_centers=max(net.n_centers, 1), output_activation=net.output_activation)
        est.network_ = net
        est.classes_ = net.classes
        est.n_features_in_ = net.centers.shape[1]
        return est

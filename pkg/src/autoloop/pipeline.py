"""From-scratch preprocessing steps and learners behind the scikit-learn API.

Each component implements fit/transform or fit/predict with get_params so the
pieces compose with standard tooling (clone, Pipeline, grid utilities). The
numerics themselves are implemented here: nearest-neighbour voting, a
misclassification-minimizing decision stump, and one-vs-rest logistic
regression trained by full-batch gradient descent with an optional in-trial
adaptive step size.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

ADAPTIVE_EPS = 1e-8


def _check_features(X, allow_nan: bool = False) -> np.ndarray:
    return check_array(
        X, dtype=float, ensure_all_finite="allow-nan" if allow_nan else True
    )


class ColumnImputer(BaseEstimator, TransformerMixin):
    """Fill missing cells (NaN) with per-column training means or zeros."""

    def __init__(self, strategy: str = "mean"):
        self.strategy = strategy

    def fit(self, X, y=None):
        X = _check_features(X, allow_nan=True)
        if self.strategy not in ("mean", "zero"):
            raise ValueError(f"unknown imputation strategy {self.strategy!r}")
        if self.strategy == "mean":
            with np.errstate(invalid="ignore"):
                fill = np.nanmean(X, axis=0)
            fill = np.where(np.isnan(fill), 0.0, fill)
        else:
            fill = np.zeros(X.shape[1])
        self.fill_ = fill
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_features(X, allow_nan=True)
        return np.where(np.isnan(X), self.fill_, X)


class Standardizer(BaseEstimator, TransformerMixin):
    """Scale columns to zero mean and unit variance using training statistics.

    Zero-variance columns are centered but not scaled.
    """

    def fit(self, X, y=None):
        X = _check_features(X)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale == 0.0, 1.0, scale)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_features(X)
        return (X - self.mean_) / self.scale_


class VarianceRankSelector(BaseEstimator, TransformerMixin):
    """Drop features whose variance percentile rank falls below a threshold.

    A column's rank is the fraction of columns with strictly smaller training
    variance, so threshold 0 keeps everything. If the rule would drop every
    column, the single highest-variance column is kept instead.
    """

    def __init__(self, threshold: float = 0.0):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = _check_features(X)
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        var = X.var(axis=0)
        rank = np.array([(var < v).sum() for v in var], dtype=float) / len(var)
        keep = rank >= self.threshold
        if not keep.any():
            keep = np.zeros(len(var), dtype=bool)
            keep[int(np.argmax(var))] = True
        self.support_ = keep
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_features(X)
        return X[:, self.support_]


def jitter_duplicate(
    X: np.ndarray, y: np.ndarray, rng: np.random.Generator, scale: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate every row once with Gaussian jitter of scale * per-column std."""
    sd = X.std(axis=0) * scale
    noise = rng.standard_normal(X.shape) * sd
    return np.vstack([X, X + noise]), np.concatenate([y, y])


def _majority(counts: np.ndarray) -> int:
    # argmax breaks ties toward the lowest class index
    return int(np.argmax(counts))


class KNNClassifier(BaseEstimator, ClassifierMixin):
    """k-nearest-neighbour majority vote with Euclidean distance.

    k is capped at the training-set size; vote ties go to the lowest class
    index and distance ties to the earliest training row.
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        self.X_ = X
        self.y_ = y.astype(int)
        self.classes_ = np.unique(self.y_)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = _check_features(X)
        k = min(self.k, len(self.X_))
        d = cdist(X, self.X_)
        neighbors = np.argsort(d, axis=1, kind="stable")[:, :k]
        n_labels = int(self.y_.max()) + 1
        votes = np.apply_along_axis(
            lambda idx: np.bincount(self.y_[idx], minlength=n_labels), 1, neighbors
        )
        return votes.argmax(axis=1)


class DecisionStump(BaseEstimator, ClassifierMixin):
    """Single-split stump minimizing training misclassification.

    Thresholds are scanned at midpoints of consecutive sorted unique values of
    each feature; each side predicts its own majority class. Ties prefer the
    lowest feature index, then the lowest threshold. If no feature admits a
    split the stump predicts the overall majority class.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        y = y.astype(int)
        self.classes_ = np.unique(y)
        n, d = X.shape
        n_labels = int(y.max()) + 1
        totals = np.bincount(y, minlength=n_labels)
        self.majority_ = _majority(totals)
        self.feature_: int | None = None
        self.threshold_ = 0.0
        self.left_class_ = self.majority_
        self.right_class_ = self.majority_

        best = None
        for j in range(d):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            ys = y[order]
            boundary = np.nonzero(xs[:-1] != xs[1:])[0]
            if len(boundary) == 0:
                continue
            onehot = np.zeros((n, n_labels), dtype=int)
            onehot[np.arange(n), ys] = 1
            left_counts = np.cumsum(onehot, axis=0)[boundary]
            right_counts = totals[None, :] - left_counts
            left_sizes = boundary + 1
            errs = (left_sizes - left_counts.max(axis=1)) + (
                (n - left_sizes) - right_counts.max(axis=1)
            )
            pos = int(np.argmin(errs))  # earliest (lowest threshold) on ties
            if best is None or errs[pos] < best[0]:
                i = boundary[pos]
                best = (
                    int(errs[pos]),
                    j,
                    float((xs[i] + xs[i + 1]) / 2.0),
                    _majority(left_counts[pos]),
                    _majority(right_counts[pos]),
                )
        if best is not None:
            _, self.feature_, self.threshold_, self.left_class_, self.right_class_ = best
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        X = _check_features(X)
        if self.feature_ is None:
            return np.full(len(X), self.majority_, dtype=int)
        left = X[:, self.feature_] <= self.threshold_
        return np.where(left, self.left_class_, self.right_class_)


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of the linear model (w, b) on targets y in {0,1}."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Analytic gradient of :func:`logistic_loss` with respect to (w, b)."""
    residual = expit(X @ w + b) - y
    return X.T @ residual / len(X), float(residual.mean())


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    lr: float,
    epochs: int,
    adaptive: bool,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-vs-rest logistic regression by full-batch gradient descent.

    Weights start at zero. In adaptive mode the per-coordinate step is
    lr / sqrt(accumulated squared gradient + 1e-8), updated every epoch.
    Returns (weights, intercepts, classes) with one row per present class;
    only this final model leaves the trial, no per-epoch trace is kept.
    The seed argument is accepted for interface stability; the procedure is
    deterministic regardless.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if len(X) == 0:
        raise ValueError("training set must not be empty")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    classes = np.unique(y)
    n_features = X.shape[1]
    W = np.zeros((len(classes), n_features))
    B = np.zeros(len(classes))
    for row, cls in enumerate(classes):
        target = (y == cls).astype(float)
        w = np.zeros(n_features)
        b = 0.0
        acc_w = np.zeros(n_features)
        acc_b = 0.0
        for _ in range(epochs):
            gw, gb = logistic_gradient(w, b, X, target)
            if adaptive:
                acc_w += gw**2
                acc_b += gb**2
                w -= lr / np.sqrt(acc_w + ADAPTIVE_EPS) * gw
                b -= lr / np.sqrt(acc_b + ADAPTIVE_EPS) * gb
            else:
                w -= lr * gw
                b -= lr * gb
        W[row] = w
        B[row] = b
    return W, B, classes


class LogisticRegressionGD(BaseEstimator, ClassifierMixin):
    """Scikit-learn wrapper around :func:`train_logreg`."""

    def __init__(self, lr: float = 0.1, epochs: int = 100, adaptive: bool = False, seed: int = 0):
        self.lr = lr
        self.epochs = epochs
        self.adaptive = adaptive
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.coef_, self.intercept_, self.classes_ = train_logreg(
            X, y, self.lr, self.epochs, self.adaptive, self.seed
        )
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = _check_features(X)
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X):
        # per-class one-vs-rest probabilities, not normalized across classes
        return expit(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]

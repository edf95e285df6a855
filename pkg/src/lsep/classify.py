"""Pooling, dimensionality reduction, fusion, and linear-SVM classification.

The reducer is a plain principal-component projection with deterministic
sign fixing; genuinely nonlinear reductions computed elsewhere can be passed
through the "external" mode instead. The SVM is a linear soft-margin model
trained by deterministic full-batch subgradient descent with a 1/t step
schedule on 0.5*||w||^2 + C * sum(hinge).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientInputError,
    ShapeError,
    TrainingError,
    ValidationError,
)
from .seeding import derive_seed


def mean_pool(matrix: np.ndarray) -> np.ndarray:
    """Arithmetic mean over rows; permutation-invariant by construction."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.shape[0] == 0:
        raise InsufficientInputError("cannot pool an empty set of vectors")
    return matrix.mean(axis=0)


class PcaReducer:
    """Principal-component projection fitted on a training matrix.

    Components are eigenvectors of the (n-1)-normalized covariance, ordered
    by decreasing eigenvalue, each sign-fixed so its largest-magnitude
    coordinate is positive; that makes the projection deterministic.
    """

    def __init__(self):
        self.mean_ = None
        self.components_ = None  # (dim, dim), columns are components
        self.eigenvalues_ = None

    def fit(self, matrix: np.ndarray) -> "PcaReducer":
        x = np.asarray(matrix, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 2:
            raise InsufficientInputError("pca needs a matrix with >= 2 rows")
        self.mean_ = x.mean(axis=0)
        centered = x - self.mean_
        cov = centered.T @ centered / (x.shape[0] - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        eigvals = np.clip(eigvals[order], 0.0, None)
        eigvecs = eigvecs[:, order]
        flip = eigvecs[np.argmax(np.abs(eigvecs), axis=0), np.arange(eigvecs.shape[1])] < 0
        eigvecs[:, flip] *= -1.0
        self.components_ = eigvecs
        self.eigenvalues_ = eigvals
        return self

    def transform(self, matrix: np.ndarray, k: int) -> np.ndarray:
        if self.components_ is None:
            raise ValidationError("reducer is not fitted")
        if k > self.components_.shape[0] or k < 1:
            raise ShapeError(f"k={k} out of range for dim {self.components_.shape[0]}")
        x = np.asarray(matrix, dtype=np.float64)
        return (x - self.mean_) @ self.components_[:, :k]

    def retained_variance(self, k: int) -> float:
        total = self.eigenvalues_.sum()
        if total == 0.0:
            return 1.0
        return float(self.eigenvalues_[:k].sum() / total)


def reduce_dim(matrix: np.ndarray, k: int, method: str = "pca", external: np.ndarray | None = None) -> np.ndarray:
    """Project rows to k dims: fit-and-transform PCA, or validate a
    precomputed external reduction and pass it through."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if method == "pca":
        if k > matrix.shape[1]:
            raise ShapeError(f"k={k} exceeds input dim {matrix.shape[1]}")
        return PcaReducer().fit(matrix).transform(matrix, k)
    if method == "external":
        if external is None:
            raise ValidationError("external reduction requires the precomputed matrix")
        external = np.asarray(external, dtype=np.float64)
        if external.shape != (matrix.shape[0], k):
            raise ShapeError(
                f"external reduction has shape {external.shape}, expected ({matrix.shape[0]}, {k})"
            )
        return external
    raise ValidationError(f"unknown reduction method {method!r}")


@dataclass(frozen=True)
class FusedFeature:
    vector: np.ndarray
    speech_dim: int
    reduced_dim: int


def fuse(v_speech: np.ndarray, e_reduced: np.ndarray) -> FusedFeature:
    """Concatenate with the speech part first; part dims stay recoverable."""
    v_speech = np.asarray(v_speech, dtype=np.float64).ravel()
    e_reduced = np.asarray(e_reduced, dtype=np.float64).ravel()
    if v_speech.size == 0 or e_reduced.size == 0:
        raise ShapeError("both fusion parts must be non-empty")
    return FusedFeature(np.concatenate([v_speech, e_reduced]), v_speech.size, e_reduced.size)


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    c: float
    seed: int


def _check_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeError("X must be (n, dim) with one label per row")
    if not np.all(np.isfinite(x)):
        raise ValidationError("features must be finite")
    if set(np.unique(y)) <= {0, 1}:
        y = 2 * y.astype(np.float64) - 1.0
    y = y.astype(np.float64)
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValidationError("labels must be in {-1,+1} (or {0,1})")
    return x, y


def svm_objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, c: float) -> float:
    margins = y * (x @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def train_svm(x: np.ndarray, y: np.ndarray, c: float = 1.0, epochs: int = 500, seed: int = 0) -> SvmModel:
    """Linear soft-margin SVM by projected full-batch subgradient descent.

    Step t uses learning rate 1/t (the strong-convexity schedule for the
    0.5*||w||^2 term). Since the optimum satisfies 0.5*||w*||^2 <= c*n,
    iterates are projected back onto that ball, which tames the early
    large-step overshoot at big c. w and b start at zero, so the run is
    deterministic and the seed is recorded only for provenance.
    """
    x, y = _check_xy(x, y)
    if np.unique(y).size < 2:
        raise TrainingError("training requires both classes")
    n = x.shape[0]
    radius = np.sqrt(2.0 * c * n)  # the optimum satisfies 0.5*||w*||^2 <= c*n
    w = np.zeros(x.shape[1])
    b = 0.0
    best = (svm_objective(w, b, x, y, c), w.copy(), b)
    for t in range(1, epochs + 1):
        margins = y * (x @ w + b)
        viol = margins < 1.0
        grad_w = w - c * ((viol * y) @ x)
        grad_b = -c * float((viol * y).sum())
        eta = 1.0 / t
        w -= eta * grad_w
        b -= eta * grad_b
        norm = float(np.linalg.norm(w))
        if norm > radius:
            w *= radius / norm
        b = float(np.clip(b, -radius, radius))
        value = svm_objective(w, b, x, y, c)
        if value < best[0]:
            best = (value, w.copy(), b)
    return SvmModel(best[1], best[2], c, seed)


def decision_value(model: SvmModel, x: np.ndarray):
    """Signed score w.x + b; accepts one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.w.shape[0]:
        raise ShapeError(f"feature dim {x.shape[-1]} != model dim {model.w.shape[0]}")
    return x @ model.w + model.b


def predict(model: SvmModel, x: np.ndarray) -> np.ndarray:
    return np.where(decision_value(model, x) >= 0.0, 1, -1)


def f1_score(predictions: np.ndarray, labels: np.ndarray) -> float:
    """F1 of the positive class; zero when precision + recall is zero."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ShapeError("predictions and labels must be equal-length and non-empty")
    pos_pred = predictions == 1
    pos_true = labels == 1
    tp = int(np.sum(pos_pred & pos_true))
    fp = int(np.sum(pos_pred & ~pos_true))
    fn = int(np.sum(~pos_pred & pos_true))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2.0 * tp / (2 * tp + fp + fn)


@dataclass(frozen=True)
class SearchTrial:
    c: float
    epochs: int
    seed: int
    f1: float


@dataclass(frozen=True)
class SearchReport:
    f1_avg: float
    f1_max: float
    f1_std: float  # population std
    trials: tuple[SearchTrial, ...]


def random_search(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_eval: np.ndarray,
    y_eval: np.ndarray,
    n_trials: int,
    seed: int = 0,
    c_range: tuple[float, float] = (1e-3, 1e3),
    epoch_choices: tuple[int, ...] = (200, 500, 1000),
) -> SearchReport:
    """Seeded random hyperparameter search reporting avg/max/std eval F1.

    C is log-uniform over c_range and the epoch count uniform over the
    choices; each trial gets a derived seed so trials are independently
    reproducible.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    trials = []
    for i in range(n_trials):
        c = float(np.exp(rng.uniform(np.log(c_range[0]), np.log(c_range[1]))))
        epochs = int(rng.choice(epoch_choices))
        trial_seed = derive_seed(seed, "trial", i)
        model = train_svm(x_train, y_train, c, epochs, trial_seed)
        f1 = f1_score(predict(model, x_eval), np.where(np.asarray(y_eval) == 1, 1, -1))
        trials.append(SearchTrial(c, epochs, trial_seed, f1))
    scores = np.array([t.f1 for t in trials])
    return SearchReport(float(scores.mean()), float(scores.max()), float(scores.std()), tuple(trials))

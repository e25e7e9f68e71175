"""Principal logistic regression: PCA scores as the design matrix of a logistic model."""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientDataError, ValidationError
from .linalg import as_data_matrix
from .pca import DEFAULT_GAMMA, PcaModel, fit_pca
from .rpca import RpcaModel, rpca_fit
from .simulate import RngStream

log = logging.getLogger(__name__)

METHODS = ("cpca", "rpca")
BASE_RIDGE = 1e-8
FALLBACK_RIDGE = 1e-4
MAX_ITER = 100
STEP_TOL = 1e-8
# every fitted probability this close to its label means the classes are separated
SEPARATION_TOL = 1e-6
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    label_names: tuple = ("0", "1")

    def __post_init__(self):
        X = as_data_matrix(self.features, "features")
        y = np.asarray(self.labels)
        if y.shape != (X.shape[1],):
            raise DimensionError(f"expected {X.shape[1]} labels, got shape {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise ValidationError("labels must be 0/1")
        if np.unique(y).size < 2:
            raise ValidationError("both classes must be present")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))
        object.__setattr__(self, "label_names", tuple(str(s) for s in self.label_names))


@dataclass(frozen=True)
class LogisticModel:
    """Weights are ``(intercept, slopes...)``.

    ``converged`` is False when the data were separable and the model was
    refitted with ``ridge = FALLBACK_RIDGE``.
    """

    weights: np.ndarray
    converged: bool
    iterations: int
    ridge: float = BASE_RIDGE

    @property
    def fallback(self):
        return self.ridge == FALLBACK_RIDGE

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _sigmoid(self.weights[0] + self.weights[1:] @ X)

    def predict(self, X):
        return (self.predict_proba(X) > 0.5).astype(np.int64)


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def principal_design(model, Y, method=None):
    """Score matrix (``k x n``) of ``Y`` under a fitted model, centred by the training mean.

    cpca: ``D^T (Y - mean)``; rpca: ``B^T (lift(Y) - lifted mean)``.
    """
    if method is None:
        method = "rpca" if isinstance(model, RpcaModel) else "cpca"
    if method == "rpca":
        if not isinstance(model, RpcaModel):
            raise TypeError("rpca design needs an RpcaModel")
        return model.scores(Y)
    if method == "cpca":
        if not isinstance(model, PcaModel):
            raise TypeError("cpca design needs a PcaModel")
        return model.scores(Y)
    raise ValueError(f"unknown method {method!r}")


def _irls(A, y, ridge):
    """Newton/IRLS on the ridge-penalised log-likelihood; the intercept is not penalised."""
    d = A.shape[1]
    pen = np.full(d, ridge)
    pen[0] = 0.0
    w = np.zeros(d)
    for it in range(1, MAX_ITER + 1):
        prob = _sigmoid(A @ w)
        grad = A.T @ (y - prob) - pen * w
        W = prob * (1.0 - prob)
        H = (A.T * W) @ A + np.diag(pen)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        if not np.isfinite(step).all():
            return w, False, it
        w = w + step
        if np.max(np.abs(step)) < STEP_TOL:
            return w, True, it
    return w, False, MAX_ITER


def logistic_fit(X, labels):
    """Fit a logistic model on the columns of score matrix ``X`` (``k x n``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(labels, dtype=float)
    if X.shape[1] != y.shape[0]:
        raise DimensionError(f"{X.shape[1]} samples but {y.shape[0]} labels")
    if min(int((y == 1).sum()), int((y == 0).sum())) < 2:
        raise InsufficientDataError("need at least 2 samples per class")
    A = np.column_stack([np.ones(X.shape[1]), X.T])
    w, ok, it = _irls(A, y, BASE_RIDGE)
    separated = bool(np.all(np.abs(_sigmoid(A @ w) - y) < SEPARATION_TOL))
    if ok and not separated and np.isfinite(w).all():
        return LogisticModel(weights=w, converged=True, iterations=it, ridge=BASE_RIDGE)
    log.info("logistic fit %s; refitting with ridge %g",
             "hit perfect separation" if separated else "did not converge", FALLBACK_RIDGE)
    w, _, it2 = _irls(A, y, FALLBACK_RIDGE)
    return LogisticModel(weights=w, converged=False, iterations=it + it2, ridge=FALLBACK_RIDGE)


def fit_split(features, labels, train_idx, method, gamma=DEFAULT_GAMMA, path="auto"):
    """Fit the PCA and the logistic model on the training columns only."""
    Y_train = features[:, train_idx]
    y_train = labels[train_idx]
    if method == "rpca":
        model = rpca_fit(Y_train, gamma, path=path)
    elif method == "cpca":
        model = fit_pca(Y_train, gamma)
    else:
        raise ValueError(f"unknown method {method!r}")
    design = principal_design(model, Y_train, method)
    return model, logistic_fit(design, y_train)


def accuracy(pred, truth):
    return float(np.mean(np.asarray(pred) == np.asarray(truth)))


@dataclass(frozen=True)
class CVResult:
    method: str
    accuracies: tuple
    redraws: int

    @property
    def mean(self):
        return float(np.mean(self.accuracies))


def split_indices(n, test_frac, rng):
    n_test = int(round(test_frac * n))
    if not 0 < n_test < n:
        raise ValueError(f"test fraction {test_frac} leaves an empty split for n={n}")
    perm = rng.permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def cross_validate(data, method, gamma=DEFAULT_GAMMA, test_frac=0.25, reps=100,
                   seed=0, path="auto"):
    """Repeated random train/test splits; returns per-split test accuracy.

    Split ``r`` draws from ``RngStream(seed, r)``. Splits whose training part
    lacks two samples of each class are redrawn from the same stream.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    X, y = data.features, data.labels
    accs = []
    redraws = 0
    for r in range(reps):
        rng = RngStream(seed, r)
        for _ in range(MAX_REDRAWS):
            train, test = split_indices(X.shape[1], test_frac, rng)
            counts = np.bincount(y[train], minlength=2)
            if counts.min() >= 2:
                break
            redraws += 1
            log.info("split %d: training set lacks a class, redrawing", r)
        else:
            raise InsufficientDataError("could not draw a training split with both classes")
        model, logit = fit_split(X, y, train, method, gamma, path)
        pred = logit.predict(principal_design(model, X[:, test], method))
        accs.append(accuracy(pred, y[test]))
    return CVResult(method=method, accuracies=tuple(accs), redraws=redraws)

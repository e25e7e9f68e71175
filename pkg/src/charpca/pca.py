"""Classical PCA: covariance path, characteristic-kernel Gram path, rank selection."""
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    DimensionError,
    InsufficientDataError,
    RankDeficiencyError,
    ValidationError,
)
from .linalg import as_data_matrix, fix_signs, mean_and_covariance, sym_eigen
from .transform import char_transform

DEFAULT_GAMMA = 0.8
CLIP_REL = 1e-10
# variance this far below the data's squared magnitude is treated as zero
DEGENERATE_REL = 1e-14


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PcaModel:
    """A fitted PCA: mean, full spectrum and the retained eigenvector basis."""

    mean: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    selected_rank: int
    threshold: float
    total_variance: float
    path: str = "covariance"

    @property
    def dim(self):
        return self.mean.shape[0]

    def scores(self, X):
        """Coordinates of the columns of ``X`` in the retained basis."""
        X = _check_dim(self, X)
        return self.basis.T @ (X - self.mean[:, None])


def _check_dim(model, X):
    X = as_data_matrix(X)
    if X.shape[0] != model.dim:
        raise DimensionError(f"data has {X.shape[0]} rows, model expects {model.dim}")
    return X


def clip_spectrum(eigenvalues, rel=CLIP_REL):
    """Zero out round-off negatives (down to ``-rel * lambda_max``)."""
    w = np.asarray(eigenvalues, dtype=float).copy()
    tol = rel * max(float(w.max(initial=0.0)), 1.0)
    if w.size and w.min() < -tol:
        raise ValidationError(f"spectrum has a negative eigenvalue {w.min():.3g}")
    w[w < 0] = 0.0
    return w


def select_rank(eigenvalues, gamma=DEFAULT_GAMMA):
    """Smallest ``k`` whose leading eigenvalues explain at least ``gamma`` of the total."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    w = clip_spectrum(eigenvalues)
    if w.size == 0 or np.any(np.diff(w) > 1e-12 * max(w[0], 1.0)):
        raise ValueError("eigenvalues must be a non-empty descending sequence")
    total = w.sum()
    if total <= 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero")
    ratio = np.cumsum(w) / total
    # 1e-12 slack so exact fractions such as 8/10 hit gamma = 0.8
    return int(np.argmax(ratio >= gamma - 1e-12)) + 1


def _check_variance(total, X):
    scale = float(np.mean(X * X))
    if total <= DEGENERATE_REL * max(scale, 1e-300):
        raise DegenerateSpectrumError("data has no variation; all eigenvalues are zero")


def fit_pca(X, gamma=DEFAULT_GAMMA):
    """PCA on the (1/n)-covariance of the columns of ``X``."""
    X = as_data_matrix(X)
    if X.shape[1] < 2:
        raise InsufficientDataError("fit_pca needs at least 2 samples")
    mean, cov = mean_and_covariance(X)
    eig = sym_eigen(cov)
    w = clip_spectrum(eig.eigenvalues)
    total = float(w.sum())
    _check_variance(total, X)
    k = select_rank(w, gamma)
    return PcaModel(
        mean=_frozen(mean),
        eigenvalues=_frozen(w),
        basis=_frozen(eig.eigenvectors[:, :k]),
        selected_rank=k,
        threshold=float(gamma),
        total_variance=total,
        path="covariance",
    )


def reconstruct(model, X):
    """Project columns of ``X`` onto the fitted affine subspace."""
    X = _check_dim(model, X)
    B = model.basis
    Xc = X - model.mean[:, None]
    return model.mean[:, None] + B @ (B.T @ Xc)


def kernel_eval(y_a, y_b):
    """Characteristic kernel ``sum_m cos(y_a[m] - y_b[m])``."""
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    if y_a.shape != y_b.shape:
        raise DimensionError(f"length mismatch: {y_a.shape} vs {y_b.shape}")
    return float(np.sum(np.cos(y_a - y_b)))


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    centered: bool = False

    def double_center(self):
        if self.centered:
            return self
        K = self.values
        row = K.mean(axis=1, keepdims=True)
        col = K.mean(axis=0, keepdims=True)
        Kc = K - row - col + K.mean()
        return GramMatrix(values=0.5 * (Kc + Kc.T), centered=True)


def gram_matrix(Y):
    """``n x n`` matrix of kernel evaluations between the columns of ``Y``."""
    R = char_transform(Y)
    K = R.T @ R
    return GramMatrix(values=0.5 * (K + K.T), centered=False)


def fit_pca_gram(Y, gamma=DEFAULT_GAMMA):
    """Lifted-space PCA through the centred Gram matrix of the kernel.

    The result lives in the ``2p``-dimensional lifted space and matches
    ``fit_pca(char_transform(Y), gamma)``; the eigenproblem is ``n x n``
    instead of ``2p x 2p``.
    """
    Y = as_data_matrix(Y, "Y")
    p, n = Y.shape
    if n < 2:
        raise InsufficientDataError("fit_pca_gram needs at least 2 samples")
    R = char_transform(Y)
    mean = R.mean(axis=1)
    Rc = R - mean[:, None]
    Kc = gram_matrix(Y).double_center()
    eig = sym_eigen(Kc.values)
    gram_w = clip_spectrum(eig.eigenvalues)
    m = 2 * p
    w = np.zeros(m)
    take = min(m, n)
    w[:take] = gram_w[:take] / n
    total = float(w.sum())
    _check_variance(total, R)
    k = select_rank(w, gamma)
    lam = gram_w[:k]
    tiny = CLIP_REL * max(gram_w[0], 1e-300)
    if (lam <= tiny).any():
        raise RankDeficiencyError(f"zero Gram eigenvalue inside retained rank {k}")
    basis = fix_signs(Rc @ eig.eigenvectors[:, :k] / np.sqrt(lam))
    return PcaModel(
        mean=_frozen(mean),
        eigenvalues=_frozen(w),
        basis=_frozen(basis),
        selected_rank=k,
        threshold=float(gamma),
        total_variance=total,
        path="gram",
    )


def leading_basis(X, k):
    """Mean and top-``k`` covariance eigenvectors of ``X``, ignoring any variance threshold."""
    X = as_data_matrix(X)
    if not 0 <= k <= X.shape[0]:
        raise DimensionError(f"k={k} outside [0, {X.shape[0]}]")
    mean, cov = mean_and_covariance(X)
    eig = sym_eigen(cov)
    return mean, eig.eigenvectors[:, :k]

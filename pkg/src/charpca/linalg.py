"""Dense linear algebra primitives.

Data matrices follow the column-sample convention throughout the package:
a ``DataMatrix`` is a 2-D float64 ``numpy.ndarray`` of shape ``(p, n)`` whose
columns are samples and whose rows are variables.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    InsufficientDataError,
    SymmetryError,
    ValidationError,
)

SYMMETRY_TOL = 1e-10


def as_data_matrix(X, name="X"):
    """Validate ``X`` as a finite 2-D float matrix and return it as float64."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise ValidationError(f"{name} has a non-finite entry at (row={row}, col={col})")
    return arr


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues sorted descending with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def fix_signs(V):
    """Flip columns of ``V`` so the entry of largest magnitude in each is positive."""
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(A, sym_tol=SYMMETRY_TOL):
    """Full eigendecomposition of a real symmetric matrix.

    Eigenvalues come back in descending order. Each eigenvector is normalised
    so that its largest-magnitude entry is positive, which makes the output
    deterministic across runs and solver paths.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValidationError("matrix has non-finite entries")
    asym = np.max(np.abs(A - A.T))
    if asym > sym_tol:
        raise SymmetryError(f"matrix is not symmetric (max |A - A^T| = {asym:.3g})")
    A = 0.5 * (A + A.T)
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"symmetric eigensolver failed to converge for a {A.shape[0]}x{A.shape[0]} matrix"
        ) from exc
    # eigh returns ascending order; reverse keeps the solver's tie order stable
    w = w[::-1].copy()
    V = fix_signs(V[:, ::-1])
    return EigenResult(eigenvalues=w, eigenvectors=V)


def random_orthonormal(p, m, rng):
    """Return a ``p x m`` matrix with orthonormal columns.

    A ``p x p`` standard-normal matrix is QR-factorised and the first ``m``
    columns of ``Q`` are kept. ``rng`` is anything exposing
    ``standard_normal`` (an ``RngStream`` or ``numpy.random.Generator``).
    """
    if m > p:
        raise DimensionError(f"cannot build {m} orthonormal columns in dimension {p}")
    if m < 0 or p < 1:
        raise DimensionError(f"invalid dimensions p={p}, m={m}")
    A = rng.standard_normal((p, p))
    Q, _ = np.linalg.qr(A)
    return np.ascontiguousarray(Q[:, :m])


def mean_and_covariance(X):
    """Sample mean and covariance with divisor ``n`` (columns are samples)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {X.shape}")
    n = X.shape[1]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    cov = Xc @ Xc.T / n
    return mean, 0.5 * (cov + cov.T)

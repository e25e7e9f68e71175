"""Reconstruction error functionals, excess-error bound and eigenvalue statistics."""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateError, DimensionError, InsufficientDataError, ValidationError
from .linalg import as_data_matrix

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class ErrorReport:
    mse: float
    empirical_recon_error: float
    k: int
    optimal_recon_error: Optional[float] = None
    excess_estimate: Optional[float] = None


@dataclass(frozen=True)
class EigenStats:
    values: tuple
    mean: float
    sd: float
    variation_ratio: float
    bias: Optional[float] = None
    bias_sd: Optional[float] = None
    lambda_ref: Optional[float] = None


@dataclass(frozen=True)
class BoundResult:
    """Bound values, stated up to the unidentified constant ``c``."""

    one_sided: float
    excess: float
    one_sided_confidence: float
    excess_confidence: float


def mse(Y, Y_hat):
    """``sum ||y_hat - y||^2 / (N P)``."""
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape != Y_hat.shape:
        raise DimensionError(f"shape mismatch: {Y.shape} vs {Y_hat.shape}")
    return float(np.sum((Y_hat - Y) ** 2) / Y.size)


def _check_basis(basis, p):
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if B.shape[0] != p:
        raise DimensionError(f"basis has {B.shape[0]} rows, data has {p}")
    k = B.shape[1]
    if k and np.max(np.abs(B.T @ B - np.eye(k))) > ORTHO_TOL:
        raise ValidationError("basis columns are not orthonormal")
    return B


def empirical_recon_error(X, basis, mean=None):
    """Average squared norm of what the basis leaves out: ``(1/n) sum ||(I - BB^T)(x - mean)||^2``.

    ``mean=None`` centres at the sample mean; pass zeros for the uncentred form.
    """
    X = as_data_matrix(X)
    B = _check_basis(basis, X.shape[0])
    mean = X.mean(axis=1) if mean is None else np.asarray(mean, dtype=float)
    Xc = X - mean[:, None]
    resid = Xc - B @ (B.T @ Xc)
    return float(np.sum(resid**2) / X.shape[1])


def estimate_dk(X, basis_k, mean=None):
    """Plug-in ratio of residual energy to total centred energy; lies in [0, 1]."""
    X = as_data_matrix(X)
    mean = X.mean(axis=1) if mean is None else np.asarray(mean, dtype=float)
    total = float(np.sum((X - mean[:, None]) ** 2) / X.shape[1])
    if total <= 0.0:
        raise DegenerateError("data has zero energy; d_k is undefined")
    return empirical_recon_error(X, basis_k, mean) / total


def second_moment_sum(X):
    """Plug-in estimate of ``sum_i E(y_i^2)``, i.e. ``(1/n) sum_j ||x_j||^2``."""
    X = as_data_matrix(X)
    return float(np.sum(X**2) / X.shape[1])


def excess_error_bound(d_k, second_moments, n, xi, c=1.0):
    """Concentration bounds on the reconstruction-error gaps.

    ``one_sided = d_k * second_moments * sqrt(c xi / (2 n))`` holds for
    ``|R(B_hat) - R_n(B_hat)|`` with probability at least ``1 - 2 exp(-xi)``;
    twice that bounds the excess error with probability ``1 - 4 exp(-xi)``.
    """
    if d_k < 0 or second_moments < 0:
        raise ValueError("d_k and second_moments must be non-negative")
    if n <= 0 or xi <= 0 or c <= 0:
        raise ValueError("n, xi and c must be positive")
    one = d_k * second_moments * math.sqrt(c * xi / (2.0 * n))
    return BoundResult(
        one_sided=one,
        excess=2.0 * one,
        one_sided_confidence=1.0 - 2.0 * math.exp(-xi),
        excess_confidence=1.0 - 4.0 * math.exp(-xi),
    )


def eigen_stats(replicates, lambda_ref=None):
    """Summaries of the largest sample eigenvalue over replicates (sd uses ddof=1).

    ``lambda_ref`` is one population value or one per replicate; the bias is
    the mean of ``lambda_hat / lambda_ref - 1``.
    """
    vals = np.asarray(replicates, dtype=float)
    if vals.size < 2:
        raise InsufficientDataError("need at least 2 replicates")
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1))
    if mean == 0.0:
        raise DegenerateError("mean eigenvalue is zero; variation ratio undefined")
    bias = bias_sd = None
    if lambda_ref is not None:
        ref = np.asarray(lambda_ref, dtype=float)
        if ref.ndim and ref.shape != vals.shape:
            raise DimensionError(f"{ref.size} references for {vals.size} replicates")
        rel = vals / ref - 1.0
        bias = float(rel.mean())
        bias_sd = float(rel.std(ddof=1))
    return EigenStats(
        values=tuple(float(v) for v in vals),
        mean=mean,
        sd=sd,
        variation_ratio=sd / mean,
        bias=bias,
        bias_sd=bias_sd,
        lambda_ref=None if lambda_ref is None else float(np.mean(lambda_ref)),
    )


def spiked_ratio(p, n, lam):
    """Rate ``p / (n lambda)`` governing the bias of a spiked sample eigenvalue."""
    if lam <= 0:
        raise ValueError(f"eigenvalue must be positive, got {lam}")
    return p / (n * lam)

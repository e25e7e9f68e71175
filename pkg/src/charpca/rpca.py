"""Robust PCA through the characteristic lift.

Fit: lift ``Y`` to ``(cos Y; sin Y)``, run ordinary PCA there and split the
retained basis into its cosine and sine halves. Reconstruct: rebuild the
complex sample ``z = zbar + B_cos B^T (r - rbar) + i B_sin B^T (r - rbar)``
and map it back to the real line with an estimated branch.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import as_data_matrix
from .pca import DEFAULT_GAMMA, PcaModel, fit_pca, fit_pca_gram
from .transform import BranchMode, char_transform, inverse_transform

PATHS = ("auto", "covariance", "gram")


@dataclass(frozen=True)
class RpcaModel:
    lifted_model: PcaModel
    cos_half: np.ndarray
    sin_half: np.ndarray
    mean_z_re: np.ndarray
    mean_z_im: np.ndarray

    @property
    def p(self):
        return self.cos_half.shape[0]

    @property
    def selected_rank(self):
        return self.lifted_model.selected_rank

    @property
    def eigenvalues(self):
        return self.lifted_model.eigenvalues

    def scores(self, Y):
        """Lifted-space principal scores of the columns of ``Y``."""
        Y = _check_p(self, Y)
        return self.lifted_model.scores(char_transform(Y))


def _check_p(model, Y):
    Y = as_data_matrix(Y, "Y")
    if Y.shape[0] != model.p:
        raise DimensionError(f"data has {Y.shape[0]} rows, model was fitted with p={model.p}")
    return Y


def resolve_path(path, p, n):
    """``auto`` picks the Gram path whenever the lifted dimension exceeds ``n``."""
    if path not in PATHS:
        raise ValueError(f"unknown path {path!r}; expected one of {PATHS}")
    if path == "auto":
        return "gram" if 2 * p > n else "covariance"
    return path


def rpca_fit(Y, gamma=DEFAULT_GAMMA, path="auto"):
    Y = as_data_matrix(Y, "Y")
    p, n = Y.shape
    if resolve_path(path, p, n) == "gram":
        lifted = fit_pca_gram(Y, gamma)
    else:
        lifted = fit_pca(char_transform(Y), gamma)
    B = lifted.basis
    return RpcaModel(
        lifted_model=lifted,
        cos_half=B[:p],
        sin_half=B[p:],
        mean_z_re=lifted.mean[:p],
        mean_z_im=lifted.mean[p:],
    )


def rpca_reconstruct_z(model, Y):
    """Low-rank complex reconstruction, returned as ``(real part, imaginary part)``."""
    Y = _check_p(model, Y)
    R = char_transform(Y)
    coef = model.lifted_model.basis.T @ (R - model.lifted_model.mean[:, None])
    Z_re = model.mean_z_re[:, None] + model.cos_half @ coef
    Z_im = model.mean_z_im[:, None] + model.sin_half @ coef
    return Z_re, Z_im


def rpca_reconstruct(model, Y, mode=BranchMode.PER_SAMPLE, lenient=False):
    """Reconstruct ``Y`` through the fitted model; branches are chosen against ``Y`` itself."""
    Y = _check_p(model, Y)
    Z_re, Z_im = rpca_reconstruct_z(model, Y)
    return inverse_transform(Z_re, Z_im, Y, mode, lenient=lenient)

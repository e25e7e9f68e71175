"""PCA on characteristically lifted data, robust to heavy tails and outliers."""
__version__ = "0.1.0"

from .errors import (
    CharPCAError,
    ConvergenceError,
    DegenerateError,
    DegenerateReconstructionError,
    DegenerateSpectrumError,
    DimensionError,
    IngestionError,
    InsufficientDataError,
    RankDeficiencyError,
    SymmetryError,
    ValidationError,
)
from .linalg import fix_signs, mean_and_covariance, random_orthonormal, sym_eigen
from .transform import BranchMode, char_transform, estimate_branch, inverse_transform, principal_arg
from .pca import PcaModel, fit_pca, fit_pca_gram, gram_matrix, kernel_eval, reconstruct, select_rank
from .rpca import RpcaModel, rpca_fit, rpca_reconstruct, rpca_reconstruct_z
from .simulate import Dist, FactorSpec, OutlierSpec, RngStream, gen_example1, gen_factor_data, inject_outliers
from .metrics import (
    eigen_stats,
    empirical_recon_error,
    estimate_dk,
    excess_error_bound,
    mse,
    second_moment_sum,
    spiked_ratio,
)
from .classify import LabeledDataset, cross_validate, logistic_fit, principal_design
from .io import load_csv, save_csv

__all__ = [
    "CharPCAError",
    "ConvergenceError",
    "DegenerateError",
    "DegenerateReconstructionError",
    "DegenerateSpectrumError",
    "DimensionError",
    "IngestionError",
    "InsufficientDataError",
    "RankDeficiencyError",
    "SymmetryError",
    "ValidationError",
    "fix_signs",
    "mean_and_covariance",
    "random_orthonormal",
    "sym_eigen",
    "BranchMode",
    "char_transform",
    "estimate_branch",
    "inverse_transform",
    "principal_arg",
    "PcaModel",
    "fit_pca",
    "fit_pca_gram",
    "gram_matrix",
    "kernel_eval",
    "reconstruct",
    "select_rank",
    "RpcaModel",
    "rpca_fit",
    "rpca_reconstruct",
    "rpca_reconstruct_z",
    "Dist",
    "FactorSpec",
    "OutlierSpec",
    "RngStream",
    "gen_example1",
    "gen_factor_data",
    "inject_outliers",
    "eigen_stats",
    "empirical_recon_error",
    "estimate_dk",
    "excess_error_bound",
    "mse",
    "second_moment_sum",
    "spiked_ratio",
    "LabeledDataset",
    "cross_validate",
    "logistic_fit",
    "principal_design",
    "load_csv",
    "save_csv",
]

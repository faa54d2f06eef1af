"""Low-rank CP approximation with orthonormal trailing factors."""
from ._kernels import BACKEND
from .als import AlsConfig, RefineTrace, refine
from .approx import ApproxConfig, ApproxResult, ZeroTensorError, approximate, rank1approx
from .extract import extract
from .io import read_tensor, write_otns
from .linalg import polar_decompose, truncated_svd
from .metrics import (
    bound_spec, cp_sigmas, hungarian_assign, lambda_sq_sum, objective_G, relative_error,
    residual_norm, theoretical_ratio, zeta,
)
from .rng import SeededRng
from .synth import GroundTruth, gaussian_tensor, incoherent_factor, structured_tensor
from .tensor import FactorSet, build_cp, contract, unfold

__all__ = [
    "BACKEND", "AlsConfig", "ApproxConfig", "ApproxResult", "FactorSet", "GroundTruth",
    "RefineTrace", "SeededRng", "ZeroTensorError", "approximate", "bound_spec", "build_cp",
    "contract", "cp_sigmas", "extract", "gaussian_tensor", "hungarian_assign",
    "incoherent_factor", "lambda_sq_sum", "objective_G", "polar_decompose", "rank1approx",
    "read_tensor", "refine", "relative_error", "residual_norm", "structured_tensor",
    "theoretical_ratio", "truncated_svd", "unfold", "write_otns", "zeta",
]

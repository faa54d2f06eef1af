"""Dense matrix kernels: truncated SVD, polar decomposition, nuclear norm.

SVDs use a fixed sign convention: each left singular vector is flipped,
together with its right partner, so that its largest-magnitude entry is
positive (first index wins ties).
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvdTruncation:
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


@dataclass(frozen=True)
class PolarPair:
    orthonormal_factor: np.ndarray
    psd_factor: np.ndarray


def _finite_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def fix_signs(left, right=None):
    """Flip columns in place so each left column's largest-|.| entry is positive."""
    if left.shape[0] == 0:
        return left, right
    idx = np.argmax(np.abs(left), axis=0)
    signs = np.where(left[idx, np.arange(left.shape[1])] < 0, -1.0, 1.0)
    left *= signs
    if right is not None:
        right *= signs
    return left, right


def _svd(M, full=False):
    P, s, Qt = np.linalg.svd(M, full_matrices=full)
    k = s.size
    P = np.array(P, order="F")
    Q = np.array(Qt[:k].T, order="F")
    fix_signs(P[:, :k], Q)
    return P, s, Q


def truncated_svd(M, R):
    """Leading ``R`` singular triplets of ``M``, best rank-``R`` factorization."""
    M = _finite_matrix(M)
    if not 1 <= R <= min(M.shape):
        raise ValueError(f"R={R} outside [1, {min(M.shape)}] for a {M.shape} matrix")
    P, s, Q = _svd(M)
    return SvdTruncation(np.asfortranarray(P[:, :R]), s[:R].copy(), np.asfortranarray(Q[:, :R]))


def leading_left_vectors(M, R):
    """``R`` orthonormal left singular vectors and their singular values.

    When ``R`` exceeds ``min(M.shape)`` the basis is completed from the full
    SVD and the missing singular values are reported as zero.
    """
    M = _finite_matrix(M)
    if not 1 <= R <= M.shape[0]:
        raise ValueError(f"R={R} outside [1, {M.shape[0]}]")
    if R <= min(M.shape):
        svd = truncated_svd(M, R)
        return svd.left_vectors, svd.singular_values
    P, s, _ = _svd(M, full=True)
    fix_signs(P[:, s.size:])
    lam = np.zeros(R)
    lam[:s.size] = s
    return np.asfortranarray(P[:, :R]), lam


def polar_decompose(V):
    """``V = U H`` with ``U`` column-orthonormal and ``H`` symmetric PSD.

    Built from the reduced SVD ``V = P diag(s) Q^T`` as ``U = P Q^T`` and
    ``H = Q diag(s) Q^T``; for rank-deficient ``V`` the factor ``U`` is the one
    given by the (deterministic) SVD.
    """
    V = _finite_matrix(V, "V")
    m, n = V.shape
    if m < n:
        raise ValueError(f"polar decomposition needs rows >= cols, got {V.shape}")
    P, s, Q = _svd(V)
    U = P @ Q.T
    H = (Q * s) @ Q.T
    H = 0.5 * (H + H.T)
    return PolarPair(np.asfortranarray(U), H)


def nuclear_norm(V):
    """Sum of singular values."""
    V = _finite_matrix(V)
    return float(np.sum(np.linalg.svd(V, compute_uv=False)))

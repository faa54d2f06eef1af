"""Objectives, residuals, approximation-ratio formulas and recovery errors."""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .linalg import _finite_matrix
from .tensor import FactorSet, as_tensor, build_cp, contract_all, fnorm, unfold


def _matrices(factors):
    if isinstance(factors, FactorSet):
        return factors.factors
    return tuple(np.asarray(f, dtype=np.float64) for f in factors)


def cp_sigmas(A, factors):
    """``sigma_i = <A, u_{0,i} o ... o u_{d-1,i}>`` for every component."""
    A = as_tensor(A)
    mats = _matrices(factors)
    if tuple(f.shape[0] for f in mats) != A.shape:
        raise ValueError(f"factor shapes {[f.shape for f in mats]} do not match {A.shape}")
    R = mats[0].shape[1]
    return np.array([float(contract_all(A, [f[:, i] for f in mats])) for i in range(R)])


def objective_G(A, factors):
    """``sum_i <A, u_{0,i} o ... o u_{d-1,i}>^2``."""
    s = cp_sigmas(A, factors)
    return float(np.dot(s, s))


def residual_norm(A, factors, sigmas):
    """``||A - sum_i sigma_i u_{0,i} o ... o u_{d-1,i}||_F``."""
    A = as_tensor(A)
    approx = build_cp(sigmas, _matrices(factors))
    if approx.shape != A.shape:
        raise ValueError(f"factor shapes {approx.shape} do not match {A.shape}")
    return fnorm(A - approx)


def lambda_sq_sum(A, R):
    """Sum of the ``R`` largest squared singular values of the last-mode unfolding."""
    A = as_tensor(A)
    s = np.linalg.svd(unfold(A, A.ndim - 1), compute_uv=False)
    return float(np.sum(s[:R] ** 2))


def zeta(m, dims):
    """Quality factor of the inner rank-1 routine for an order-``m`` tensor.

    ``zeta(0) = zeta(1) = 1``, ``zeta(2) = sqrt(n_1)`` and, for ``m >= 3``,
    ``sqrt(n_1 * ... * n_{m-2}) * sqrt(n_1)`` with the dimensions sorted
    ascending.
    """
    return math.sqrt(zeta_sq(m, dims))


def zeta_sq(m, dims):
    """``zeta(m)^2`` as an exact integer."""
    if m <= 1:
        return 1
    n = sorted(int(x) for x in dims)
    if len(n) < m:
        raise ValueError(f"need {m} dimensions, got {len(n)}")
    if m == 2:
        return n[0]
    return math.prod(n[:m - 2]) * n[0]


def theoretical_ratio(shape, R, t):
    """Guaranteed fraction of ``sum_i lambda_i^2`` achieved by the algorithm."""
    shape = tuple(int(n) for n in shape)
    d = len(shape)
    if not 1 <= t <= d:
        raise ValueError(f"t must lie in [1, {d}]")
    if t == d:
        return 1.0 / (R ** (d - 1) * math.prod(shape[1:d - 1]))
    return 1.0 / (R ** (t - 1) * zeta_sq(d - t, shape[:d - t]) * math.prod(shape[d - t:d - 1]))


@dataclass(frozen=True)
class BoundSpec:
    shape: tuple
    R: int
    t: int
    beta_js: dict  # orthonormal splitting mode -> beta
    zeta_values: dict  # m -> zeta(m) over the leading dims
    ratio: float


def bound_spec(shape, R, t):
    shape = tuple(int(n) for n in shape)
    d = len(shape)
    betas = {j: (1.0 if j == 0 else 1.0 / shape[j]) for j in range(d - t, d - 1)}
    zetas = {m: zeta(m, shape[:m]) for m in range(0, d)}
    return BoundSpec(shape, R, t, betas, zetas, theoretical_ratio(shape, R, t))


def hungarian_assign(cost):
    """Minimum-cost perfect assignment; ``perm[row] = column``."""
    cost = _finite_matrix(cost, "cost")
    if cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    return np.asarray(_kernels.hungarian(np.ascontiguousarray(cost)))


def _signed_costs(U, V):
    # c[a, b] = min(||u_a - v_b||^2, ||u_a + v_b||^2), by direct differences
    minus = U[:, :, None] - V[:, None, :]
    plus = U[:, :, None] + V[:, None, :]
    return np.minimum(np.sum(minus * minus, axis=0), np.sum(plus * plus, axis=0))


def relative_error(truth, est, global_perm=False):
    """Sum over modes of ``||U_j - U^est_j Pi_j||_F / ||U_j||_F``.

    Columns are matched up to sign.  With ``global_perm`` one permutation,
    chosen on the cost summed over modes, is shared by every mode.
    """
    T, E = _matrices(truth), _matrices(est)
    if len(T) != len(E) or any(a.shape != b.shape for a, b in zip(T, E)):
        raise ValueError("truth and estimate must have matching factor shapes")
    costs = [_signed_costs(a, b) for a, b in zip(T, E)]
    if global_perm:
        perm = hungarian_assign(sum(costs))
        perms = [perm] * len(costs)
    else:
        perms = [hungarian_assign(c) for c in costs]
    rows = np.arange(costs[0].shape[0])
    total = 0.0
    for U, c, p in zip(T, costs, perms):
        total += math.sqrt(float(np.sum(c[rows, p]))) / math.sqrt(float(np.sum(U * U)))
    return total


def column_recovery_errors(truth, est):
    """Per mode and column, ``min(||u - u_est||, ||u + u_est||)`` after one
    shared matching; returns an ``(d, R)`` array."""
    T, E = _matrices(truth), _matrices(est)
    costs = [_signed_costs(a, b) for a, b in zip(T, E)]
    perm = hungarian_assign(sum(costs))
    rows = np.arange(costs[0].shape[0])
    return np.sqrt(np.array([c[rows, perm] for c in costs]))


def rank1_guarantee_holds(dims):
    """Whether the inner rank-1 routine provably reaches ``||C|| / zeta(m)``
    on an order-``m`` tensor with these dimensions.

    The routine guarantees ``||C|| / sqrt(n_1 * ... * n_{m-1})`` (all modes
    but the first, in the given order); that is at least as strong as
    ``zeta`` whenever the product does not exceed ``zeta(m)^2``, which is
    always the case for ``m <= 2`` and for cubical shapes.
    """
    m = len(dims)
    if m <= 2:
        return True
    return math.prod(int(n) for n in dims[1:]) <= zeta_sq(m, dims)

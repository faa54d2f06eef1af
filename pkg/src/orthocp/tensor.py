"""Dense tensors, unfoldings, contractions and CP reconstruction.

Tensors are plain ``numpy.ndarray`` objects kept in column-major (Fortran)
layout, so mode 0 varies fastest in the flat data.  Modes are 0-based.

The mode-``j`` unfolding puts mode ``j`` on the rows and enumerates the
remaining modes on the columns in ascending order, lowest mode fastest.  For
a tensor whose last mode is ``j`` this is the matrix ``M`` with
``<u, M y> = <contract(T, j, u), reshape(y)>`` where ``reshape`` is the
column-major refold of ``y`` to the leading modes.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels

MAX_ORDER = 8


def as_tensor(data, *, allow_scalar=False):
    """Validate and return a float64, column-major copy-or-view of ``data``."""
    A = np.asarray(data, dtype=np.float64)
    if A.ndim == 0:
        if not allow_scalar:
            raise ValueError("tensor must have order >= 1")
        return A.copy()
    A = np.asfortranarray(A)
    if A.ndim > MAX_ORDER:
        raise ValueError(f"tensor order {A.ndim} exceeds the supported maximum {MAX_ORDER}")
    if any(n < 1 for n in A.shape):
        raise ValueError(f"all dimensions must be >= 1, got shape {A.shape}")
    return A


def _check_mode(A, mode):
    if not 0 <= mode < A.ndim:
        raise IndexError(f"mode {mode} out of range for order-{A.ndim} tensor")


def unfold(A, mode):
    """Mode-``mode`` unfolding, shape ``(n_mode, prod of the other dims)``."""
    A = np.asarray(A)
    _check_mode(A, mode)
    n = A.shape[mode]
    return np.asfortranarray(np.moveaxis(A, mode, 0).reshape(n, -1, order="F"))


def refold(M, mode, shape):
    """Inverse of :func:`unfold`."""
    shape = tuple(int(n) for n in shape)
    if not 0 <= mode < len(shape):
        raise IndexError(f"mode {mode} out of range for order-{len(shape)} shape")
    moved = (shape[mode],) + shape[:mode] + shape[mode + 1:]
    T = np.asarray(M).reshape(moved, order="F")
    return np.asfortranarray(np.moveaxis(T, 0, mode))


def contract(A, mode, u):
    """Tensor-times-vector along ``mode``; the result has order ``d - 1``.

    Contracting an order-1 tensor returns a 0-d array holding the scalar.
    """
    A = np.asarray(A, dtype=np.float64)
    _check_mode(A, mode)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (A.shape[mode],):
        raise ValueError(f"vector of length {u.shape} does not match dimension "
                         f"{A.shape[mode]} of mode {mode}")
    left = int(np.prod(A.shape[:mode], dtype=np.int64))
    right = int(np.prod(A.shape[mode + 1:], dtype=np.int64))
    a3 = A.reshape(left, A.shape[mode], right, order="F")
    out = _kernels.contract3(a3, u).reshape(A.shape[:mode] + A.shape[mode + 1:], order="F")
    # asfortranarray would promote the order-0 result to shape (1,)
    return out if out.ndim == 0 else np.asfortranarray(out)


def contract_all(A, vectors, skip=None):
    """Contract every mode except ``skip`` with the matching vector.

    ``vectors`` holds one vector per mode; the entry at ``skip`` is ignored.
    Modes are contracted from the last one down so indices stay valid.
    """
    T = np.asarray(A, dtype=np.float64)
    for mode in range(T.ndim - 1, -1, -1):
        if mode == skip:
            continue
        T = contract(T, mode, vectors[mode])
    return T


def inner(A, B):
    """Entrywise inner product of two tensors of identical shape."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.dot(A.ravel(order="F"), B.ravel(order="F")))


def fnorm(A):
    """Frobenius norm, ``sqrt(inner(A, A))``."""
    return float(np.sqrt(inner(A, A)))


def _stack(factors):
    factors = [np.asarray(f, dtype=np.float64) for f in factors]
    if not factors:
        raise ValueError("at least one factor matrix is required")
    R = {f.shape[1] if f.ndim == 2 else -1 for f in factors}
    if len(R) != 1 or -1 in R:
        raise ValueError("factor matrices must be 2-d with a common column count")
    dims = np.array([f.shape[0] for f in factors], dtype=np.int64)
    return np.ascontiguousarray(np.vstack(factors)), dims


def build_cp(sigmas, factors):
    """``sum_i sigmas[i] * u_{0,i} o u_{1,i} o ... o u_{d-1,i}``."""
    stack, dims = _stack(factors)
    sigmas = np.ascontiguousarray(sigmas, dtype=np.float64)
    if sigmas.shape != (stack.shape[1],):
        raise ValueError(f"expected {stack.shape[1]} weights, got shape {sigmas.shape}")
    flat = _kernels.cp_full(sigmas, stack, dims)
    return np.asfortranarray(flat.reshape(tuple(int(n) for n in dims), order="F"))


def mttkrp(A, factors, mode):
    """Matrix whose column ``i`` is ``A`` contracted with every other mode's column ``i``."""
    A = as_tensor(A)
    _check_mode(A, mode)
    stack, dims = _stack(factors)
    if tuple(dims) != A.shape:
        raise ValueError(f"factor shapes {tuple(dims)} do not match tensor shape {A.shape}")
    flat = np.ascontiguousarray(A.ravel(order="F"))
    return np.asfortranarray(_kernels.mttkrp(flat, dims, stack, mode))


@dataclass(frozen=True)
class FactorSet:
    """Factor matrices ``U_0..U_{d-1}`` with weights; the last
    ``num_orthonormal`` factors have orthonormal columns, the rest unit columns.
    """

    factors: tuple
    sigmas: np.ndarray
    num_orthonormal: int

    def __post_init__(self):
        factors = tuple(np.asfortranarray(f, dtype=np.float64) for f in self.factors)
        sigmas = np.asarray(self.sigmas, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "sigmas", sigmas)
        if not factors:
            raise ValueError("a FactorSet needs at least one factor")
        if any(f.ndim != 2 or f.shape[1] != sigmas.size for f in factors):
            raise ValueError("every factor must be n_j x R with R = len(sigmas)")
        if not 1 <= self.num_orthonormal <= len(factors):
            raise ValueError(f"num_orthonormal must lie in [1, {len(factors)}]")

    @property
    def order(self):
        return len(self.factors)

    @property
    def rank(self):
        return self.sigmas.size

    @property
    def shape(self):
        return tuple(f.shape[0] for f in self.factors)

    def is_orthonormal_mode(self, mode):
        return mode >= self.order - self.num_orthonormal

    def feasibility_residuals(self):
        """Per-mode residuals: ``||U^T U - I||_F`` for orthonormal modes,
        ``max_i | ||u_i|| - 1 |`` for the others."""
        out = []
        for j, U in enumerate(self.factors):
            if self.is_orthonormal_mode(j):
                out.append(float(np.linalg.norm(U.T @ U - np.eye(self.rank))))
            else:
                out.append(float(np.max(np.abs(np.linalg.norm(U, axis=0) - 1.0))))
        return out

    def check(self, ortho_tol=1e-10, unit_tol=1e-12):
        """Raise ``ValueError`` if a factor violates its constraint."""
        scale = max(1, self.rank)
        for j, res in enumerate(self.feasibility_residuals()):
            tol = ortho_tol * scale if self.is_orthonormal_mode(j) else unit_tol
            if not res <= tol:
                kind = "orthonormality" if self.is_orthonormal_mode(j) else "unit-norm"
                raise ValueError(f"mode {j} violates {kind}: residual {res:.3e} > {tol:.1e}")

    def to_tensor(self):
        return build_cp(self.sigmas, self.factors)

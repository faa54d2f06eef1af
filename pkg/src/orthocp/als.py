"""Alternating refinement of a feasible factor set.

Each sweep visits modes ``0..d-1`` in order.  With ``W`` the MTTKRP of the
current factors at mode ``j`` (column ``i`` is ``A`` contracted with every
other mode's column ``i``):

* orthonormal mode: ``U_j <- polar(W diag(s))`` where ``s_i = <u_{j,i}, w_i>``
  are the current weights, i.e. the exact minimizer of the fit with weights
  held fixed;
* unit-column mode: ``u_{j,i} <- +/- w_i / ||w_i||``, sign kept aligned with the
  previous column, which maximizes ``<u, w_i>^2``.

Weights are refreshed as ``sigma_i = <A, u_{0,i} o ... o u_{d-1,i}>`` after the
sweep.  Because at least one mode is orthonormal the rank-1 terms are
mutually orthogonal, the residual equals ``sqrt(||A||^2 - sum sigma_i^2)``,
and every block step is monotone in the residual.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import polar_decompose
from .metrics import cp_sigmas, residual_norm
from .tensor import FactorSet, as_tensor, mttkrp


@dataclass(frozen=True)
class AlsConfig:
    max_iters: int = 2000
    rel_change_tol: float = 1e-5
    regularizer_eps: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.rel_change_tol > 0:
            raise ValueError("rel_change_tol must be > 0")
        if self.regularizer_eps < 0:
            raise ValueError("regularizer_eps must be >= 0")


@dataclass
class RefineTrace:
    residuals: list = field(default_factory=list)  # entry 0 is the starting point
    objectives: list = field(default_factory=list)
    changes: list = field(default_factory=list)  # one per sweep
    iterations: int = 0
    converged: bool = False
    wall_time_ms: float = 0.0


def refine(A, init, cfg=AlsConfig()):
    """Refine ``init`` against ``A``; returns ``(FactorSet, RefineTrace)``."""
    start = time.perf_counter()
    A = as_tensor(A)
    if init.shape != A.shape:
        raise ValueError(f"factor shapes {init.shape} do not match tensor shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("tensor has non-finite entries")
    d, t = A.ndim, init.num_orthonormal
    U = [np.array(f, order="F") for f in init.factors]

    trace = RefineTrace()
    sig = cp_sigmas(A, U)
    trace.residuals.append(residual_norm(A, U, sig))
    trace.objectives.append(float(np.dot(sig, sig)))

    for it in range(1, cfg.max_iters + 1):
        prev = [u.copy() for u in U]
        for j in range(d):
            W = mttkrp(A, U, j)
            s = np.einsum("ij,ij->j", U[j], W)
            if j >= d - t:
                U[j] = polar_decompose(W * s).orthonormal_factor
            else:
                norms = np.linalg.norm(W, axis=0)
                ok = norms > cfg.regularizer_eps
                signs = np.where(s < 0, -1.0, 1.0)
                U[j][:, ok] = W[:, ok] * (signs[ok] / norms[ok])
            if not np.all(np.isfinite(U[j])):
                raise FloatingPointError(f"non-finite factor at mode {j}, sweep {it}")
        sig = cp_sigmas(A, U)
        change = sum(float(np.linalg.norm(u - p) / np.linalg.norm(p)) for u, p in zip(U, prev))
        trace.residuals.append(residual_norm(A, U, sig))
        trace.objectives.append(float(np.dot(sig, sig)))
        trace.changes.append(change)
        trace.iterations = it
        if change <= cfg.rel_change_tol:
            trace.converged = True
            break

    trace.wall_time_ms = 1e3 * (time.perf_counter() - start)
    return FactorSet(tuple(U), sig, t), trace

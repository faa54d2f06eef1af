"""Approximation algorithm for CP approximation with orthonormal trailing factors.

Given an order-``d`` tensor ``A``, a rank ``R`` and the number ``t`` of
trailing modes constrained to orthonormal columns, :func:`approximate`
returns a feasible factor set with a guaranteed fraction of
``sum_i lambda_i(A_(d-1))^2``:

1. ``U_{d-1}`` holds the leading ``R`` left singular vectors of the
   last-mode unfolding.
2. Walking down the orthonormal modes, each component ``i`` carries a partial
   contraction ``B_i`` of ``A`` with the factors already fixed.  The
   last-mode unfolding of ``B_i`` is reduced to one vector by a row
   extraction procedure (splitting), and the resulting ``n_j x R`` matrix is
   projected onto the orthonormal set by its polar factor (gathering).
3. The remaining ``d - t`` unit-column factors come from one rank-1
   approximation per component of the fully contracted ``B_i``.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .extract import VARIANTS, ZeroMatrixError, extract
from .linalg import leading_left_vectors, polar_decompose
from .rng import SeededRng
from .tensor import FactorSet, as_tensor, contract, contract_all, fnorm, unfold


class ZeroTensorError(ValueError):
    pass


@dataclass(frozen=True)
class ApproxConfig:
    R: int
    t: int
    variant: str = "A"
    seed: int = 0
    rank1_power_iters: int = 0

    def validate(self, shape):
        d = len(shape)
        if d < 2:
            raise ValueError(f"need a tensor of order >= 2, got order {d}")
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if not 1 <= self.t <= d:
            raise ValueError(f"t must lie in [1, {d}], got {self.t}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.rank1_power_iters < 0:
            raise ValueError("rank1_power_iters must be >= 0")
        small = min(shape[d - self.t:])
        if self.R > small:
            raise ValueError(f"R={self.R} does not fit an orthonormal factor with "
                             f"{small} rows (shape {tuple(shape)}, t={self.t})")


@dataclass
class ApproxResult:
    factors: FactorSet
    objective: float
    # mode -> R values <u_{j,i}, v_{j,i}> for every orthonormal mode
    per_level_products: dict
    # mode -> list of the unit witnesses y_{j,i} (orthonormal modes below the last)
    witnesses: dict = field(default_factory=dict)
    # mode -> (||v_{j,i}||^2, ||M_{j,i}||_F^2) arrays, splitting levels only
    level_norms: dict = field(default_factory=dict)
    singular_values: np.ndarray = None
    degenerate: bool = False


def approximate(A, cfg):
    """Run the splitting/gathering algorithm on ``A`` with configuration ``cfg``."""
    A = as_tensor(A)
    cfg.validate(A.shape)
    return _approximate(A, cfg, SeededRng(cfg.seed))


def _approximate(A, cfg, rng):
    d, R, t = A.ndim, cfg.R, cfg.t
    last = d - 1
    factors = [None] * d
    degenerate = not np.any(A)

    U_last, lam = leading_left_vectors(unfold(A, last), R)
    factors[last] = U_last
    products = {last: lam.copy()}
    witnesses, level_norms = {}, {}

    blocks = [A] * R
    for j in range(d - 2, d - t - 1, -1):
        n_j = A.shape[j]
        blocks = [contract(B, j + 1, factors[j + 1][:, i]) for i, B in enumerate(blocks)]
        V = np.zeros((n_j, R), order="F")
        ys, v_sq, m_sq = [], np.zeros(R), np.zeros(R)
        for i, B in enumerate(blocks):
            if j > 0:
                M = unfold(B, j)
                try:
                    out = extract(M, cfg.variant, rng.stream(j, i))
                    v, y = out.v, out.y
                except ZeroMatrixError:
                    degenerate = True
                    y = np.zeros(M.shape[1])
                    y[0] = 1.0
                    v = M @ y
                m_sq[i] = np.dot(M.ravel(), M.ravel())
            else:
                v, y = np.array(B, copy=True), np.ones(1)
                m_sq[i] = np.dot(v, v)
            V[:, i] = v
            ys.append(y)
            v_sq[i] = np.dot(v, v)
        U_j = polar_decompose(V).orthonormal_factor
        factors[j] = U_j
        products[j] = np.einsum("ij,ij->j", U_j, V)
        witnesses[j] = ys
        level_norms[j] = (v_sq, m_sq)

    if t < d:
        k = d - t  # first orthonormal mode; modes 0..k-1 come from rank-1 fits
        cols = [np.zeros((A.shape[m], R), order="F") for m in range(k)]
        r1cfg = replace(cfg, R=1)
        for i, B in enumerate(blocks):
            C = contract(B, k, factors[k][:, i])
            try:
                us = _rank1(C, r1cfg, rng.stream(d, i))
            except ZeroTensorError:
                degenerate = True
                us = [np.eye(n, 1)[:, 0] for n in C.shape]
            for m in range(k):
                cols[m][:, i] = us[m]
        factors[:k] = cols

    sigmas = np.array([float(contract_all(A, [f[:, i] for f in factors])) for i in range(R)])
    fs = FactorSet(tuple(factors), sigmas, t)
    return ApproxResult(
        factors=fs,
        objective=float(np.dot(sigmas, sigmas)),
        per_level_products=products,
        witnesses=witnesses,
        level_norms=level_norms,
        singular_values=lam,
        degenerate=degenerate,
    )


def rank1approx(C, cfg=None, rng=None):
    """Unit vectors ``x_0..x_{m-1}`` with a large ``<C, x_0 o ... o x_{m-1}>``.

    The algorithm itself with ``R = 1, t = m`` gives the starting point, then
    ``cfg.rank1_power_iters`` alternating sweeps (each vector replaced by the
    normalized contraction of ``C`` with all the others) polish it.  The value
    never decreases during the sweeps.
    """
    C = as_tensor(C)
    if cfg is None:
        cfg = ApproxConfig(R=1, t=C.ndim if C.ndim > 1 else 2)
    if rng is None:
        rng = SeededRng(cfg.seed)
    return _rank1(C, cfg, rng)


def _rank1(C, cfg, rng):
    norm = fnorm(C)
    if norm == 0.0:
        raise ZeroTensorError("rank-1 approximation of a zero tensor")
    m = C.ndim
    if m == 1:
        return [C / norm]
    res = _approximate(C, replace(cfg, R=1, t=m), rng)
    us = [f[:, 0].copy() for f in res.factors.factors]
    for _ in range(cfg.rank1_power_iters):
        power_sweep(C, us)
    return us


def power_sweep(C, us):
    """One alternating sweep over the modes, updating ``us`` in place."""
    for j in range(C.ndim):
        w = contract_all(C, us, skip=j)
        nrm = np.sqrt(np.dot(w, w))
        if nrm > 0.0:
            us[j] = w / nrm
    return us


def rank1_value(C, us):
    return float(contract_all(C, us))

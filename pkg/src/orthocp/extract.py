"""Procedures that pull one representative column vector out of a matrix.

Each procedure picks a unit vector ``y`` in the row space of ``M`` and returns
``v = M @ y`` together with ``y``:

* ``A`` - ``y`` is the leading right singular vector.
* ``B`` - ``y`` is the largest-norm row, normalized (first one on ties).
* ``C`` - ``y`` is a uniformly random row, normalized.
* ``D`` - ``y`` is uniform on the unit sphere.

``A`` and ``B`` guarantee ``||v||^2 >= ||M||_F^2 / rows``; ``C`` does so in
expectation and ``D`` has ``E||v||^2 = ||M||_F^2 / cols``.
"""
from dataclasses import dataclass

import numpy as np

from .linalg import truncated_svd
from .rng import SeededRng

VARIANTS = ("A", "B", "C", "D")


class ZeroMatrixError(ValueError):
    """The procedure needs a nonzero matrix (or a nonzero row)."""


@dataclass(frozen=True)
class ExtractionOutcome:
    v: np.ndarray
    y: np.ndarray
    variant: str


def _matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _scaled_row_sq_norms(M):
    # dividing by the largest |entry| keeps tiny matrices from underflowing
    scale = np.max(np.abs(M), initial=0.0)
    S = M / scale if scale > 0 else M
    return S, np.einsum("ij,ij->i", S, S)


def _row_outcome(M, S, k, variant):
    row = S[k]
    y = row / np.sqrt(np.dot(row, row))
    return ExtractionOutcome(M @ y, y, variant)


def extract_a(M):
    M = _matrix(M)
    if not np.any(M):
        raise ZeroMatrixError("procedure A needs a nonzero matrix")
    y = truncated_svd(M, 1).right_vectors[:, 0].copy()
    return ExtractionOutcome(M @ y, y, "A")


def extract_b(M):
    M = _matrix(M)
    S, norms = _scaled_row_sq_norms(M)
    k = int(np.argmax(norms))
    if norms[k] == 0.0:
        raise ZeroMatrixError("procedure B needs a nonzero matrix")
    return _row_outcome(M, S, k, "B")


def extract_c(M, rng):
    """Uniform row choice; a zero row is replaced by a uniform draw among the
    nonzero rows, so ``k`` is effectively uniform over nonzero rows."""
    M = _matrix(M)
    S, norms = _scaled_row_sq_norms(M)
    nonzero = np.flatnonzero(norms > 0.0)
    if nonzero.size == 0:
        raise ZeroMatrixError("procedure C needs a nonzero matrix")
    k = rng.integers(M.shape[0])
    if norms[k] == 0.0:
        k = int(nonzero[rng.integers(nonzero.size)])
    return _row_outcome(M, S, k, "C")


def extract_d(M, rng):
    M = _matrix(M)
    while True:
        g = rng.standard_normal(M.shape[1])
        nrm = np.sqrt(np.dot(g, g))
        if nrm > 0.0:
            break
    y = g / nrm
    return ExtractionOutcome(M @ y, y, "D")


def extract(M, variant, rng=None):
    """Dispatch on ``variant``; ``rng`` is required for ``C`` and ``D``."""
    if variant == "A":
        return extract_a(M)
    if variant == "B":
        return extract_b(M)
    if variant in ("C", "D"):
        if rng is None:
            raise ValueError(f"procedure {variant} needs a SeededRng")
        return extract_c(M, rng) if variant == "C" else extract_d(M, rng)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def expected_sq_norm_c(M):
    """Exact ``E||v||^2`` of :func:`extract_c`, by enumerating the row choice."""
    M = _matrix(M)
    S, sq = _scaled_row_sq_norms(M)
    nonzero = np.flatnonzero(sq > 0.0)
    if nonzero.size == 0:
        raise ZeroMatrixError("procedure C needs a nonzero matrix")
    Y = S[nonzero] / np.sqrt(sq[nonzero, None])
    # row s of (Y M^T) holds <M^k, y_s> for every k
    return float(np.mean(np.sum((Y @ M.T) ** 2, axis=1)))


__all__ = [
    "VARIANTS", "ExtractionOutcome", "SeededRng", "ZeroMatrixError", "expected_sq_norm_c",
    "extract", "extract_a", "extract_b", "extract_c", "extract_d",
]

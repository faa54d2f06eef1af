"""Synthetic test tensors."""
from dataclasses import dataclass

import numpy as np

from .linalg import polar_decompose
from .rng import SeededRng
from .tensor import FactorSet, as_tensor, build_cp, fnorm


@dataclass(frozen=True)
class GroundTruth:
    """Planted factors; ``factors.sigmas`` are the weights of the noiseless part
    exactly as it appears in the returned tensor."""

    factors: FactorSet
    noise_level: float
    incoherence: float = None

    @property
    def sigmas(self):
        return self.factors.sigmas

    def to_dict(self):
        return {
            "sigmas": self.factors.sigmas.tolist(),
            "factors": [f.tolist() for f in self.factors.factors],
            "num_orthonormal": self.factors.num_orthonormal,
            "noise_level": self.noise_level,
            "incoherence": self.incoherence,
        }

    @classmethod
    def from_dict(cls, data):
        fs = FactorSet(tuple(np.array(f) for f in data["factors"]), np.array(data["sigmas"]),
                       int(data["num_orthonormal"]))
        return cls(fs, float(data["noise_level"]), data.get("incoherence"))


def _shape(shape):
    shape = tuple(int(n) for n in shape)
    if not shape or any(n < 1 for n in shape):
        raise ValueError(f"invalid shape {shape}")
    return shape


def gaussian_tensor(shape, seed):
    """I.i.d. standard normal entries."""
    shape = _shape(shape)
    g = SeededRng(seed).standard_normal(int(np.prod(shape)))
    return as_tensor(g.reshape(shape, order="F"))


def _orthonormalize(raw):
    Q, Rq = np.linalg.qr(raw)
    signs = np.where(np.diag(Rq) < 0, -1.0, 1.0)
    return np.asfortranarray(Q * signs)


def incoherent_factor(n, R, delta, seed, max_iter=1000):
    """``n x R`` unit columns with pairwise ``|<u_a, u_b>| <= delta``.

    Random unit columns are pulled toward their nearest orthonormal matrix
    (the polar factor) until the cap holds.
    """
    if not 1 <= R <= n:
        raise ValueError(f"need 1 <= R <= n, got R={R}, n={n}")
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    rng = SeededRng(seed)
    raw = rng.standard_normal((n, R))
    if delta == 0:
        return _orthonormalize(raw)
    U = raw / np.linalg.norm(raw, axis=0)
    for _ in range(max_iter):
        G = U.T @ U
        np.fill_diagonal(G, 0.0)
        if np.max(np.abs(G), initial=0.0) <= delta:
            return np.asfortranarray(U)
        U = 0.5 * (U + polar_decompose(U).orthonormal_factor)
        U /= np.linalg.norm(U, axis=0)
    raise ValueError(f"could not reach incoherence {delta} for n={n}, R={R} "
                     f"in {max_iter} iterations")


def structured_tensor(shape, R, t, beta, seed, exact_mode=False, incoherence=None):
    """Planted CP tensor with ``t`` orthonormal trailing factors plus noise.

    The planted part ``B`` has weights and raw factors uniform on ``[-1, 1]``;
    the trailing ``t`` factors are orthonormalized (QR with a positive
    diagonal) and the others column-normalized, or drawn with pairwise
    coherence at most ``incoherence`` when given.  The returned tensor is
    ``B/||B|| + beta * N/||N||`` with ``N`` uniform on ``[-1, 1]``.

    ``exact_mode`` drops the noise and the normalization and draws distinct
    weights sorted decreasingly from ``[0.5, 1.5]``, so the tensor equals
    ``build_cp`` of the ground truth exactly.

    Returns ``(A, GroundTruth)``.
    """
    shape = _shape(shape)
    d = len(shape)
    if not 1 <= t <= d:
        raise ValueError(f"t must lie in [1, {d}]")
    for j in range(d - t, d):
        if R > shape[j]:
            raise ValueError(f"R={R} exceeds dimension {shape[j]} of orthonormal mode {j}")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    rng = SeededRng(seed)

    if exact_mode:
        wr = rng.stream(0)
        while True:
            sig = np.sort(wr.uniform(0.5, 1.5, R))[::-1].copy()
            if np.all(np.diff(sig) < 0):
                break
    else:
        sig = rng.stream(0).uniform(-1.0, 1.0, R)

    factors = []
    for j, n in enumerate(shape):
        sub = rng.stream(1, j)
        if j >= d - t:
            factors.append(_orthonormalize(sub.uniform(-1.0, 1.0, (n, R))))
        elif incoherence is not None:
            factors.append(incoherent_factor(n, R, incoherence, sub.integers(2**63)))
        else:
            raw = sub.uniform(-1.0, 1.0, (n, R))
            factors.append(np.asfortranarray(raw / np.linalg.norm(raw, axis=0)))

    B = build_cp(sig, factors)
    if exact_mode:
        truth = GroundTruth(FactorSet(tuple(factors), sig, t), 0.0, incoherence)
        return B, truth

    scale = fnorm(B)
    A = B / scale
    if beta > 0:
        N = rng.stream(2).uniform(-1.0, 1.0, shape)
        A = A + beta * (N / fnorm(N))
    truth = GroundTruth(FactorSet(tuple(factors), sig / scale, t), float(beta), incoherence)
    return as_tensor(A), truth


def random_factor_set(shape, R, t, seed):
    """Feasible random starting point: Gaussian columns, orthonormalized on the
    trailing ``t`` modes and normalized elsewhere; unit weights."""
    shape = _shape(shape)
    d = len(shape)
    rng = SeededRng(seed)
    factors = []
    for j, n in enumerate(shape):
        raw = rng.stream(j).standard_normal((n, R))
        if j >= d - t:
            factors.append(_orthonormalize(raw))
        else:
            factors.append(np.asfortranarray(raw / np.linalg.norm(raw, axis=0)))
    return FactorSet(tuple(factors), np.ones(R), t)

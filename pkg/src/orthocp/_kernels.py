"""Hot inner loops, each with a numba path and a pure-numpy fallback.

The active backend is fixed at import time from ``ORTHOCP_BACKEND``
(``numba`` or ``numpy``; default ``numba``, falling back to ``numpy`` when
numba is not importable).  Both implementations stay importable under their
explicit names so the benchmark and the tests can compare them side by side.

All tensors handed to these kernels are column-major: mode 0 varies fastest.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

HAS_NUMBA = numba is not None


def _requested_backend():
    name = os.environ.get("ORTHOCP_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"ORTHOCP_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


BACKEND = _requested_backend()


# ---------------------------------------------------------------------------
# single-mode contraction of an (L, n, K) view
# ---------------------------------------------------------------------------

def contract3_numpy(a3, u):
    return np.einsum("lkr,k->lr", a3, u)


def _contract3_loops(a3, u):
    L, n, K = a3.shape
    out = np.zeros((K, L)).T
    for r in range(K):
        for k in range(n):
            uk = u[k]
            for l in range(L):
                out[l, r] += a3[l, k, r] * uk
    return out


# ---------------------------------------------------------------------------
# CP reconstruction: sum_i sigma_i u_{0,i} o ... o u_{d-1,i}, flattened F-order
# ---------------------------------------------------------------------------

def _khatri_rao(mats):
    # rows enumerate the modes of `mats` with the first matrix varying fastest
    R = mats[0].shape[1]
    kr = mats[0]
    for m in mats[1:]:
        kr = (m[:, None, :] * kr[None, :, :]).reshape(-1, R)
    return kr


def cp_full_numpy(sigmas, stack, dims):
    mats = _split(stack, dims)
    return _khatri_rao(mats) @ sigmas


def _cp_full_loops(sigmas, stack, dims):
    d = dims.shape[0]
    R = sigmas.shape[0]
    total = 1
    for k in range(d):
        total *= dims[k]
    offsets = np.zeros(d, np.int64)
    acc = 0
    for k in range(d):
        offsets[k] = acc
        acc += dims[k]
    out = np.zeros(total)
    buf = np.empty(total)
    for i in range(R):
        size = dims[0]
        for p in range(size):
            buf[p] = sigmas[i] * stack[offsets[0] + p, i]
        for k in range(1, d):
            n = dims[k]
            # expand in place from the top block down; block 0 is rewritten last
            for q in range(n - 1, -1, -1):
                uq = stack[offsets[k] + q, i]
                base = size * q
                for p in range(size - 1, -1, -1):
                    buf[base + p] = buf[p] * uq
            size *= n
        for e in range(total):
            out[e] += buf[e]
    return out


# ---------------------------------------------------------------------------
# MTTKRP: column i = tensor contracted with every other mode's i-th column
# ---------------------------------------------------------------------------

def mttkrp_numpy(flat, dims, stack, mode):
    mats = _split(stack, dims)
    shape = tuple(int(n) for n in dims)
    A = flat.reshape(shape, order="F")
    unf = np.moveaxis(A, mode, 0).reshape(shape[mode], -1, order="F")
    others = [m for k, m in enumerate(mats) if k != mode]
    if not others:
        return unf * np.ones((1, stack.shape[1]))
    return unf @ _khatri_rao(others)


def _mttkrp_loops(flat, dims, stack, mode):
    d = dims.shape[0]
    R = stack.shape[1]
    offsets = np.zeros(d, np.int64)
    acc = 0
    for k in range(d):
        offsets[k] = acc
        acc += dims[k]
    out = np.zeros((R, dims[mode])).T
    idx = np.zeros(d, np.int64)
    coef = np.empty(R)
    for e in range(flat.shape[0]):
        a = flat[e]
        if a != 0.0:
            for i in range(R):
                coef[i] = a
            for k in range(d):
                if k != mode:
                    row = offsets[k] + idx[k]
                    for i in range(R):
                        coef[i] *= stack[row, i]
            r = idx[mode]
            for i in range(R):
                out[r, i] += coef[i]
        # odometer increment, mode 0 fastest
        k = 0
        while k < d:
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0
            k += 1
    return out


# ---------------------------------------------------------------------------
# Hungarian method (shortest augmenting path with potentials), square cost
# ---------------------------------------------------------------------------

def _hungarian_loops(cost):
    n = cost.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, np.int64)
    way = np.zeros(n + 1, np.int64)
    minv = np.empty(n + 1)
    used = np.zeros(n + 1, np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, np.int64)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def hungarian_numpy(cost):
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, np.int64)
    way = np.zeros(n + 1, np.int64)
    cols = np.arange(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = cols[~used[1:]]
            cur = cost[i0 - 1, free - 1] - u[i0] - v[free]
            better = cur < minv[free]
            minv[free[better]] = cur[better]
            way[free[better]] = j0
            pick = np.argmin(minv[free])
            j1 = int(free[pick])
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, np.int64)
    perm[p[1:] - 1] = cols - 1
    return perm


def _split(stack, dims):
    out = []
    start = 0
    for n in dims:
        out.append(stack[start:start + int(n)])
        start += int(n)
    return out


if HAS_NUMBA:
    _njit = numba.njit(cache=True)
    contract3_numba = _njit(_contract3_loops)
    cp_full_numba = _njit(_cp_full_loops)
    mttkrp_numba = _njit(_mttkrp_loops)
    hungarian_numba = _njit(_hungarian_loops)
else:  # pragma: no cover
    contract3_numba = cp_full_numba = mttkrp_numba = hungarian_numba = None

IMPLEMENTATIONS = {
    "contract3": {"numpy": contract3_numpy, "numba": contract3_numba},
    "cp_full": {"numpy": cp_full_numpy, "numba": cp_full_numba},
    "mttkrp": {"numpy": mttkrp_numpy, "numba": mttkrp_numba},
    "hungarian": {"numpy": hungarian_numpy, "numba": hungarian_numba},
}

contract3 = IMPLEMENTATIONS["contract3"][BACKEND]
cp_full = IMPLEMENTATIONS["cp_full"][BACKEND]
mttkrp = IMPLEMENTATIONS["mttkrp"][BACKEND]
hungarian = IMPLEMENTATIONS["hungarian"][BACKEND]

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orthocp.metrics import (
    bound_spec, column_recovery_errors, cp_sigmas, hungarian_assign, lambda_sq_sum, objective_G,
    rank1_guarantee_holds, relative_error, residual_norm, theoretical_ratio, zeta,
)
from orthocp.tensor import FactorSet, build_cp, unfold

from conftest import random_orthonormal, random_unit_columns


def test_objective_rank_one_self():
    g = np.random.default_rng(0)
    us = [random_unit_columns(g, n, 1) for n in (3, 4, 5)]
    A = build_cp(np.array([2.5]), us)
    assert objective_G(A, us) == pytest.approx(float(np.sum(A ** 2)), rel=1e-12)


def test_objective_orthogonal_noiseless():
    g = np.random.default_rng(1)
    fs = [random_unit_columns(g, 4, 3), random_orthonormal(g, 5, 3), random_orthonormal(g, 6, 3)]
    s = np.array([3.0, -2.0, 0.5])
    A = build_cp(s, fs)
    assert objective_G(A, fs) == pytest.approx(float(s @ s), rel=1e-12)
    assert lambda_sq_sum(A, 3) == pytest.approx(float(s @ s), rel=1e-12)


def test_objective_shape_mismatch():
    with pytest.raises(ValueError):
        objective_G(np.ones((2, 3)), [np.ones((2, 1)), np.ones((4, 1))])


def test_residual_norm(rng):
    fs = [random_unit_columns(rng, n, 2) for n in (3, 4, 2)]
    s = np.array([1.5, -0.5])
    A = build_cp(s, fs)
    assert residual_norm(A, fs, s) <= 1e-14
    assert residual_norm(A, fs, np.zeros(2)) == pytest.approx(np.linalg.norm(A))
    B = rng.standard_normal(A.shape)
    brute = 0.0
    for idx in itertools.product(*map(range, A.shape)):
        approx = sum(s[i] * np.prod([fs[m][idx[m], i] for m in range(3)]) for i in range(2))
        brute += (B[idx] - approx) ** 2
    assert residual_norm(B, fs, s) == pytest.approx(math.sqrt(brute), rel=1e-12)


def test_lambda_sq_sum(rng):
    A = rng.standard_normal((3, 4, 5))
    M = unfold(A, 2)
    eig = np.sort(np.linalg.eigvalsh(M @ M.T))[::-1]
    assert lambda_sq_sum(A, 2) == pytest.approx(eig[:2].sum(), rel=1e-12)
    assert lambda_sq_sum(A, 5) == pytest.approx(float(np.sum(A ** 2)), rel=1e-12)


def test_zeta_values():
    assert zeta(0, []) == 1.0
    assert zeta(1, [7]) == 1.0
    assert zeta(2, (4, 9)) == 2.0
    assert zeta(2, (9, 4)) == 2.0
    assert zeta(3, (4, 4, 4)) == 4.0
    assert zeta(4, (2, 3, 5, 7)) == pytest.approx(math.sqrt(2 * 3) * math.sqrt(2))


def test_theoretical_ratio_examples():
    for n, R in [(4, 2), (6, 3)]:
        assert theoretical_ratio((n,) * 4, R, 4) == pytest.approx(1 / (R ** 3 * n ** 2))
    assert theoretical_ratio((3, 4, 5, 6), 1, 4) == pytest.approx(1 / (4 * 5))
    assert theoretical_ratio((5, 5, 5), 2, 2) == pytest.approx(0.1)


@given(st.lists(st.integers(2, 9), min_size=2, max_size=5), st.data())
def test_theoretical_ratio_monotone(shape, data):
    d = len(shape)
    t = data.draw(st.integers(1, d))
    R = data.draw(st.integers(1, 4))
    r = theoretical_ratio(shape, R, t)
    assert 0 < r <= 1
    assert theoretical_ratio(shape, R + 1, t) <= r
    j = data.draw(st.integers(0, d - 1))
    bigger = list(shape)
    bigger[j] += 1
    assert theoretical_ratio(bigger, R, t) <= r * (1 + 1e-15)


def test_bound_spec():
    b = bound_spec((3, 4, 5, 6), 2, 4)
    assert b.beta_js == {0: 1.0, 1: 0.25, 2: 0.2}
    assert b.ratio == theoretical_ratio((3, 4, 5, 6), 2, 4)
    assert b.zeta_values[2] == math.sqrt(3)


def test_rank1_guarantee_predicate():
    assert rank1_guarantee_holds((5, 5, 5))
    assert rank1_guarantee_holds((2, 9))
    assert not rank1_guarantee_holds((2, 9, 9))


def test_hungarian_examples():
    perm = hungarian_assign(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert perm.tolist() == [0, 1]
    perm = hungarian_assign(np.full((4, 4), 3.0))
    assert sorted(perm.tolist()) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        hungarian_assign(np.ones((2, 3)))
    with pytest.raises(ValueError):
        hungarian_assign(np.array([[np.nan]]))


def test_hungarian_planted(rng):
    for _ in range(20):
        plant = rng.permutation(5)
        cost = rng.uniform(1, 2, (5, 5))
        cost[np.arange(5), plant] = rng.uniform(0, 0.1, 5)
        best = min(itertools.permutations(range(5)),
                   key=lambda p: cost[np.arange(5), list(p)].sum())
        assert hungarian_assign(cost).tolist() == list(best) == plant.tolist()


def _truth(rng, shape=(4, 5, 6), R=3, t=2):
    d = len(shape)
    fs = [random_unit_columns(rng, n, R) if j < d - t else random_orthonormal(rng, n, R)
          for j, n in enumerate(shape)]
    return FactorSet(tuple(fs), np.ones(R), t)


@pytest.mark.parametrize("glob", [False, True])
def test_relative_error_invariances(rng, glob):
    truth = _truth(rng)
    assert relative_error(truth, truth, global_perm=glob) == 0.0
    perm = rng.permutation(3)
    signs = rng.choice([-1.0, 1.0], (3, 3))
    est = FactorSet(tuple(U[:, perm] * signs[j] for j, U in enumerate(truth.factors)),
                    truth.sigmas, truth.num_orthonormal)
    assert relative_error(truth, est, global_perm=glob) <= 1e-15


def test_relative_error_brute_force_r2():
    U = [np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), np.array([[0.6, 0.0], [0.8, 0.0], [0.0, 1.0]])]
    E = [np.array([[0.1, 0.99], [0.99, -0.1], [0.0, 0.0]]), np.array([[0.0, -0.6], [0.1, -0.8], [1.0, 0.0]])]
    truth, est = FactorSet(tuple(U), np.ones(2), 1), FactorSet(tuple(E), np.ones(2), 1)

    def brute(global_perm):
        perms = list(itertools.permutations(range(2)))
        signs = list(itertools.product([-1, 1], repeat=2))
        per_mode = []
        for Uj, Ej in zip(U, E):
            per_mode.append({p: min(np.linalg.norm(Uj - Ej[:, list(p)] * s) for s in signs)
                             / np.linalg.norm(Uj) for p in perms})
        if global_perm:
            return min(sum(m[p] for m in per_mode) for p in perms)
        return sum(min(m.values()) for m in per_mode)

    assert relative_error(truth, est) == pytest.approx(brute(False), rel=1e-12)
    # the shared permutation minimizes summed squared costs, which coincides here
    assert relative_error(truth, est, global_perm=True) == pytest.approx(brute(True), rel=1e-12)


def test_relative_error_rank_mismatch(rng):
    with pytest.raises(ValueError):
        relative_error(_truth(rng, R=3), _truth(rng, R=2))


def test_column_recovery_errors(rng):
    truth = _truth(rng)
    est = FactorSet(tuple(-U[:, ::-1] for U in truth.factors), truth.sigmas, 2)
    errs = column_recovery_errors(truth, est)
    assert errs.shape == (3, 3) and np.max(errs) <= 1e-15


def test_cp_sigmas_definition(rng):
    A = rng.standard_normal((3, 4))
    fs = [random_unit_columns(rng, 3, 2), random_orthonormal(rng, 4, 2)]
    np.testing.assert_allclose(cp_sigmas(A, fs), np.einsum("ab,ai,bi->i", A, *fs), rtol=1e-12)


def test_zeta_sq_exact():
    from orthocp.metrics import zeta_sq
    assert zeta_sq(2, (5, 6)) == 5
    assert zeta_sq(4, (7, 3, 2, 5)) == 2 * 3 * 2
    assert zeta(4, (7, 3, 2, 5)) == pytest.approx(math.sqrt(12))

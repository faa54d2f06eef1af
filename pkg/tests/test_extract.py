import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orthocp.extract import (
    ZeroMatrixError, expected_sq_norm_c, extract, extract_a, extract_b, extract_c, extract_d,
)
from orthocp.rng import SeededRng

DIAG = np.array([[3.0, 0.0], [0.0, 4.0]])
mats = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False)))


def test_a_diagonal():
    out = extract_a(DIAG)
    np.testing.assert_allclose(np.abs(out.y), [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(np.abs(out.v), [0.0, 4.0], atol=1e-14)


def test_a_rank_one(rng):
    a, b = rng.standard_normal(4), rng.standard_normal(3)
    b /= np.linalg.norm(b)
    out = extract_a(np.outer(a, b))
    sign = np.sign(out.y @ b)
    np.testing.assert_allclose(out.v, sign * a, atol=1e-12)


def test_b_diagonal_and_ties():
    out = extract_b(DIAG)
    np.testing.assert_array_equal(out.y, [0.0, 1.0])
    np.testing.assert_array_equal(out.v, [0.0, 4.0])
    tie = extract_b(np.array([[1.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_array_equal(tie.y, [1.0, 0.0])


def test_b_rank_one(rng):
    a, b = rng.standard_normal(4), rng.standard_normal(3)
    out = extract_b(np.outer(a, b))
    k = np.argmax(np.abs(a))
    np.testing.assert_allclose(out.v, a * np.linalg.norm(b) * np.sign(a[k]), rtol=1e-12)


def test_c_expectation_closed_form():
    assert expected_sq_norm_c(DIAG) == pytest.approx(12.5)


def test_c_monte_carlo():
    root = SeededRng(5)
    vals = np.array([np.sum(extract_c(DIAG, root.stream(k)).v ** 2) for k in range(10_000)])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - 12.5) <= 3 * se


def test_c_single_row_equals_b():
    M = np.array([[1.0, -2.0, 2.0]])
    np.testing.assert_array_equal(extract_c(M, SeededRng(0)).v, extract_b(M).v)


def test_c_zero_row_resampled():
    M = np.array([[0.0, 0.0], [1.0, 2.0], [0.0, 0.0]])
    for k in range(50):
        assert np.any(extract_c(M, SeededRng(k)).y)


def test_d_identity_unit():
    for k in range(20):
        assert np.sum(extract_d(np.eye(3), SeededRng(k)).v ** 2) == pytest.approx(1.0)


def test_d_monte_carlo():
    g = SeededRng(11)
    Y = g.standard_normal((100_000, 2))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    vals = np.sum((Y @ DIAG.T) ** 2, axis=1)
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - 12.5) <= 3 * se
    # single draws through the public procedure follow the same law
    draws = [np.sum(extract_d(DIAG, g.stream(k)).v ** 2) for k in range(2000)]
    assert abs(np.mean(draws) - 12.5) <= 3 * np.std(draws) / np.sqrt(2000)


def test_sphere_moments():
    m = 4
    g = SeededRng(3)
    Y = np.array([extract_d(np.eye(m), g.stream(k)).y for k in range(20_000)])
    a = np.array([1.0, -2.0, 0.5, 3.0])
    proj = (Y @ a) ** 2
    assert abs(proj.mean() - a @ a / m) <= 3 * proj.std(ddof=1) / np.sqrt(len(proj))
    sq = Y[:, 0] ** 2
    assert abs(sq.mean() - 1 / m) <= 3 * sq.std(ddof=1) / np.sqrt(len(sq))
    cross = Y[:, 0] * Y[:, 1]
    assert abs(cross.mean()) <= 3 * cross.std(ddof=1) / np.sqrt(len(cross))


@given(mats, st.integers(0, 2**32))
def test_outcome_invariants(M, seed):
    if not np.any(M):
        for v in "ABC":
            with pytest.raises(ZeroMatrixError):
                extract(M, v, SeededRng(seed))
        return
    rows = M.shape[0]
    fro = np.sum(M ** 2)
    for variant in "ABCD":
        out = extract(M, variant, SeededRng(seed))
        assert out.variant == variant
        assert np.linalg.norm(out.y) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_array_equal(out.v, M @ out.y)
        if variant in "AB":
            assert np.sum(out.v ** 2) >= fro / rows * (1 - 1e-12)
    assert expected_sq_norm_c(M) >= fro / rows * (1 - 1e-12)


def test_c_enumeration_matches_formula(rng):
    M = rng.standard_normal((4, 3))
    M[2] = 0.0
    nz = [0, 1, 3]
    direct = np.mean([np.sum((M @ (M[s] / np.linalg.norm(M[s]))) ** 2) for s in nz])
    assert expected_sq_norm_c(M) == pytest.approx(direct, rel=1e-12)


def test_dispatch_errors():
    with pytest.raises(ValueError):
        extract(DIAG, "C")
    with pytest.raises(ValueError):
        extract(DIAG, "Z")
    with pytest.raises(ValueError):
        extract_a(np.ones(3))


def test_seeded_determinism():
    M = np.random.default_rng(0).standard_normal((5, 6))
    for v in "CD":
        a = extract(M, v, SeededRng(42).stream(1, 2))
        b = extract(M, v, SeededRng(42).stream(1, 2))
        assert a.v.tobytes() == b.v.tobytes()

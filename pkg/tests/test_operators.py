"""Linear-operator tests: adjoint identities, norms, and input validation."""

import numpy as np
import pytest

from ipnsolve.operators import (DctSubsampledOperator, DenseOperator,
                                RowScaledOperator, dct_adjoint, dct_forward,
                                power_iteration_norm_sq)

from conftest import rng_for


def _check_adjoint(op, rng, trials=25, tol=1e-10):
    m, n = op.shape
    for _ in range(trials):
        u = rng.standard_normal(n)
        v = rng.standard_normal(m)
        lhs = float(op.matvec(u) @ v)
        rhs = float(u @ op.rmatvec(v))
        assert abs(lhs - rhs) <= tol * (1.0 + abs(lhs))


def test_dense_adjoint_and_norm():
    rng = rng_for(0)
    mat = rng.standard_normal((7, 12))
    op = DenseOperator(mat)
    _check_adjoint(op, rng)
    exact = float(np.linalg.norm(mat, 2) ** 2)
    assert op.norm_sq() == pytest.approx(exact, rel=1e-8)


def test_dct_subsampled_adjoint():
    rng = rng_for(1)
    rows = rng.choice(256, size=32, replace=False)
    op = DctSubsampledOperator(256, rows)
    assert op.shape == (32, 256)
    _check_adjoint(op, rng)


def test_dct_rows_are_orthonormal():
    # A A^T = I exactly for subsampled rows of an orthonormal transform.
    rng = rng_for(2)
    rows = rng.choice(128, size=16, replace=False)
    op = DctSubsampledOperator(128, rows)
    eye = np.column_stack([op.matvec(op.rmatvec(e)) for e in np.eye(16)])
    assert np.allclose(eye, np.eye(16), atol=1e-12)
    assert op.norm_sq() == 1.0


def test_dct_forward_adjoint_functions_match_operator():
    rng = rng_for(3)
    rows = np.sort(rng.choice(64, size=8, replace=False))
    op = DctSubsampledOperator(64, rows)
    x = rng.standard_normal(64)
    y = rng.standard_normal(8)
    assert np.allclose(dct_forward(x, rows), op.matvec(x))
    assert np.allclose(dct_adjoint(y, rows, 64), op.rmatvec(y))


def test_dct_operator_validation():
    with pytest.raises(ValueError):
        DctSubsampledOperator(16, [])
    with pytest.raises(ValueError):
        DctSubsampledOperator(16, [0, 16])
    with pytest.raises(ValueError):
        DctSubsampledOperator(16, [-1, 3])
    with pytest.raises(ValueError):
        DctSubsampledOperator(16, [2, 2, 5])
    with pytest.raises(ValueError):
        dct_forward(np.zeros(8), np.array([9]))
    with pytest.raises(ValueError):
        dct_adjoint(np.zeros(1), np.array([9]), 8)


def test_row_scaled_operator():
    rng = rng_for(4)
    mat = rng.standard_normal((6, 10))
    scale = rng.uniform(0.5, 2.0, size=6)
    op = RowScaledOperator(DenseOperator(mat), scale)
    _check_adjoint(op, rng)
    x = rng.standard_normal(10)
    assert np.allclose(op.matvec(x), scale * (mat @ x))
    exact = float(np.linalg.norm(scale[:, None] * mat, 2) ** 2)
    assert op.norm_sq() == pytest.approx(exact, rel=1e-6)
    with pytest.raises(ValueError):
        RowScaledOperator(DenseOperator(mat), np.ones(5))


def test_power_iteration_matches_eigensolver():
    rng = rng_for(5)
    mat = rng.standard_normal((9, 9))
    est = power_iteration_norm_sq(lambda x: mat @ x, lambda y: mat.T @ y, 9,
                                  iters=500, tol=1e-14)
    assert est == pytest.approx(float(np.linalg.norm(mat, 2) ** 2), rel=1e-6)


def test_power_iteration_zero_operator():
    assert power_iteration_norm_sq(lambda x: 0.0 * x, lambda y: 0.0 * y, 5) == 0.0


def test_power_iteration_deterministic():
    rng = rng_for(6)
    mat = rng.standard_normal((8, 8))
    a = power_iteration_norm_sq(lambda x: mat @ x, lambda y: mat.T @ y, 8)
    b = power_iteration_norm_sq(lambda x: mat @ x, lambda y: mat.T @ y, 8)
    assert a == b

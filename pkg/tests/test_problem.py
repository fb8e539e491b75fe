"""Composite-problem layer: objective sentinel values, accurate differences,
and the stationarity characterization of the KKT residual mapping."""

import numpy as np
import pytest

from ipnsolve import (CompositeProblem, DenseOperator, L1Reg, OracleError,
                      StudentTLoss, ZeroReg, kkt_residual, objective)
from ipnsolve.problem import ProxOracle, SmoothOracle, objective_diff

from conftest import rng_for


class _Quadratic(SmoothOracle):
    def __init__(self, Q, c):
        self.Q, self.c = Q, c

    def value(self, x):
        return 0.5 * float(x @ (self.Q @ x)) + float(self.c @ x)

    def gradient(self, x):
        return self.Q @ x + self.c


def _toy_problem(rng, n=6, lam=0.5):
    M = rng.standard_normal((n, n))
    Q = M @ M.T + np.eye(n)
    c = rng.standard_normal(n)
    return CompositeProblem(_Quadratic(Q, c), L1Reg(lam), n)


def test_objective_sums_parts():
    rng = rng_for(30)
    p = _toy_problem(rng)
    x = rng.standard_normal(6)
    assert objective(p, x) == pytest.approx(
        p.smooth.value(x) + p.reg.value(x))


def test_objective_inf_outside_domain():
    class _Indicator(ProxOracle):
        def value(self, x):
            return 0.0 if np.all(x >= 0) else np.inf

        def prox(self, u, t):
            return np.maximum(u, 0.0)

    rng = rng_for(31)
    p = CompositeProblem(_Quadratic(np.eye(3), np.zeros(3)), _Indicator(), 3)
    assert objective(p, -np.ones(3)) == np.inf
    assert objective(p, np.ones(3)) == pytest.approx(1.5)


def test_objective_raises_on_nonfinite_smooth():
    class _Bad(SmoothOracle):
        def value(self, x):
            return float("nan")

        def gradient(self, x):
            return np.full_like(x, np.nan)

    p = CompositeProblem(_Bad(), ZeroReg(), 2)
    with pytest.raises(OracleError):
        objective(p, np.zeros(2))
    with pytest.raises(OracleError):
        kkt_residual(p, np.zeros(2))


def test_objective_diff_matches_direct_subtraction():
    rng = rng_for(32)
    A = DenseOperator(rng.standard_normal((5, 8)))
    b = rng.standard_normal(5)
    p = CompositeProblem(StudentTLoss(A, b, 0.25), L1Reg(0.3), 8)
    x = rng.standard_normal(8)
    s = rng.standard_normal(8) * 0.1
    assert objective_diff(p, x, s) == pytest.approx(
        objective(p, x + s) - objective(p, x), rel=1e-9, abs=1e-12)


def test_kkt_residual_zero_iff_stationary():
    # For min 1/2||x - v||^2 + lam ||x||_1 the solution is soft-threshold(v).
    rng = rng_for(33)
    n, lam = 7, 0.6
    v = rng.standard_normal(n) * 2
    p = CompositeProblem(_Quadratic(np.eye(n), -v), L1Reg(lam), n)
    x_star = np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
    assert np.linalg.norm(kkt_residual(p, x_star)) <= 1e-14
    # any perturbed point is flagged as non-stationary
    assert np.linalg.norm(kkt_residual(p, x_star + 0.1)) > 1e-3


def test_kkt_residual_reuses_supplied_gradient():
    rng = rng_for(34)
    p = _toy_problem(rng)
    x = rng.standard_normal(6)
    g = p.smooth.gradient(x)
    assert np.array_equal(kkt_residual(p, x, g), kkt_residual(p, x))


def test_kkt_residual_unit_prox_parameter():
    # G(x) = x - prox_g(x - grad f(x)) with prox parameter exactly 1.
    rng = rng_for(35)
    p = _toy_problem(rng, lam=0.9)
    x = rng.standard_normal(6)
    g = p.smooth.gradient(x)
    expected = x - p.reg.prox(x - g, 1.0)
    assert np.array_equal(kkt_residual(p, x), expected)

"""Semismooth Newton inner solver: dual construction, certificate algebra,
and agreement with an independent long-run FISTA reference."""

import numpy as np
import pytest

from ipnsolve import (DenseOperator, InnerSolveError, L1Reg, SsnConfig,
                      SsnSubproblem, ssn_solve)
from ipnsolve.problem import HessianInfo

from conftest import fista_reference, rng_for


def make_sub(rng, n=12, m=9, lam=0.4, mu_hat=0.3, c=0.05, negative_curvature=False):
    """Dense subproblem plus its explicit (H, grad) for reference computations."""
    mat = rng.standard_normal((m, n)) / np.sqrt(n)
    D = rng.uniform(0.5, 2.0, size=m)
    if negative_curvature:
        D[0] = -0.3
    resid_grad = rng.standard_normal(m)
    x_k = rng.standard_normal(n)
    reg = L1Reg(lam)
    sub = SsnSubproblem(DenseOperator(mat), D, resid_grad, x_k, mu_hat, c, reg)
    H = mat.T @ np.diag(D + sub.rho) @ mat + mu_hat * np.eye(n)
    grad_k = mat.T @ resid_grad
    return sub, H, grad_k, x_k, reg


def _reference_solution(H, grad_k, x_k, reg, iters=40000):
    L = float(np.linalg.norm(H, 2))
    return fista_reference(lambda y: grad_k + H @ (y - x_k), L, reg.prox,
                           x_k, iters=iters)


def test_rho_keeps_curvature_positive():
    rng = rng_for(40)
    sub, _, _, _, _ = make_sub(rng, negative_curvature=True)
    assert sub.rho == pytest.approx(0.5 * 0.05 + 0.3)
    sub2, _, _, _, _ = make_sub(rng)
    assert sub2.rho == 0.0


def test_apply_V_is_at_least_identity():
    rng = rng_for(41)
    sub, _, _, x_k, _ = make_sub(rng)
    v_point = rng.standard_normal(sub.n)
    for _ in range(20):
        s = rng.standard_normal(sub.m)
        assert float(s @ sub.apply_V(v_point, s)) >= float(s @ s) - 1e-12


def test_dual_grad_matches_value_finite_differences():
    rng = rng_for(42)
    sub, _, _, _, _ = make_sub(rng)
    z = rng.standard_normal(sub.m) * 0.3
    grad, _ = sub.dual_grad(z)
    t = 1e-6
    for _ in range(6):
        h = rng.standard_normal(sub.m)
        h /= np.linalg.norm(h)
        fd = (sub.dual_value(z + t * h) - sub.dual_value(z - t * h)) / (2 * t)
        assert abs(fd - float(grad @ h)) <= 1e-5 * (1 + abs(fd))


@pytest.mark.parametrize("negative_curvature", [False, True])
def test_ssn_matches_fista_reference(negative_curvature):
    rng = rng_for(43 if negative_curvature else 44)
    sub, H, grad_k, x_k, reg = make_sub(rng,
                                        negative_curvature=negative_curvature)
    cert = ssn_solve(sub, SsnConfig(), outer_bound=1e-4, grad_target=1e-12)
    ref = _reference_solution(H, grad_k, x_k, reg)
    assert np.linalg.norm(cert.x_hat - ref) <= 1e-6
    assert cert.residual_norm <= cert.bound


def test_certificate_is_a_subgradient_of_the_model():
    # eps = -A_k^T grad_phi(z) must satisfy eps - grad q_smooth(x_hat) in
    # partial g(x_hat): equal to lam*sign on the support, within [-lam, lam]
    # off it.
    rng = rng_for(45)
    sub, H, grad_k, x_k, reg = make_sub(rng)
    cert = ssn_solve(sub, SsnConfig(), outer_bound=1e-3)
    grad_phi, x_hat = sub.dual_grad(cert.z_hat)
    eps = -sub.A_k.rmatvec(grad_phi)
    assert np.allclose(x_hat, cert.x_hat)
    assert np.linalg.norm(eps) == pytest.approx(cert.residual_norm, rel=1e-12)
    xi = eps - (grad_k + H @ (x_hat - x_k))
    lam = reg.lam
    tol = 1e-9
    for i in range(sub.n):
        if x_hat[i] != 0.0:
            assert abs(xi[i] - lam * np.sign(x_hat[i])) <= tol
        else:
            assert abs(xi[i]) <= lam + tol


def test_grad_target_drives_dual_to_root():
    rng = rng_for(46)
    sub, _, _, _, _ = make_sub(rng)
    cert = ssn_solve(sub, SsnConfig(), outer_bound=1.0, grad_target=1e-12)
    grad, _ = sub.dual_grad(cert.z_hat)
    assert np.linalg.norm(grad) <= 1e-12


def test_iteration_exhaustion_reports_best_iterate():
    rng = rng_for(47)
    sub, _, _, _, _ = make_sub(rng)
    with pytest.raises(InnerSolveError) as exc:
        ssn_solve(sub, SsnConfig(max_iters=0), outer_bound=1e-14)
    assert exc.value.x_best is not None
    assert exc.value.residual > exc.value.bound


def test_from_hessian_info_requires_composite_form():
    rng = rng_for(48)
    with pytest.raises(ValueError):
        SsnSubproblem.from_hessian_info(
            HessianInfo(lambda_min_lower_bound=0.0, dense=np.eye(3)),
            np.zeros(3), 0.3, 0.05, L1Reg(1.0))
    sub, _, _, x_k, reg = make_sub(rng)
    info = HessianInfo(lambda_min_lower_bound=0.0,
                       diag=rng.uniform(0.5, 1.0, size=sub.m),
                       op=sub.A_k.base, resid_grad=rng.standard_normal(sub.m))
    built = SsnSubproblem.from_hessian_info(info, x_k, 0.3, 0.05, reg)
    assert built.m == sub.m and built.n == sub.n


def test_ssn_config_validation():
    with pytest.raises(ValueError):
        SsnConfig(gamma=0.5)
    with pytest.raises(ValueError):
        SsnConfig(beta_bar=1.0)
    with pytest.raises(ValueError):
        SsnConfig(beta_hat=0.0)
    with pytest.raises(ValueError):
        SsnConfig(beta_tilde=1.0)

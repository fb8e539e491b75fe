"""Semismooth Newton solver for the dual of the proximal Newton x-subproblem.

The subproblem ``min_x q(x; x_k, H_k)`` with ``H_k = A_k^T A_k + mu_hat I``
(``A_k`` a row-scaled measurement operator) is solved through its dual: find a
root of the nonsmooth map

    grad_phi(z) = -A_k prox_{g/mu_hat}(x_k - A_k^T z / mu_hat) + z + b_k - g_k

by Newton steps on elements of the Clarke generalized Jacobian
``V = A_k U A_k^T / mu_hat + I``, with CG for the linear systems and an Armijo
line search on the dual value.  The primal point recovered from any dual
iterate carries an explicit subgradient of ``q``, which yields a checkable
accuracy certificate for the outer loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import LinearOperator, RowScaledOperator
from .problem import HessianInfo, ProxOracle


class InnerSolveError(RuntimeError):
    """Inner solver failed to produce a certified subproblem solution."""

    def __init__(self, msg, x_best=None, residual=None, bound=None):
        super().__init__(msg)
        self.x_best = x_best
        self.residual = residual
        self.bound = bound


@dataclass
class SsnConfig:
    """Parameters of the semismooth Newton inner solver: Armijo slope
    ``gamma``, CG residual cap ``beta_bar``, CG exponent ``beta_hat``, and
    backtracking factor ``beta_tilde``.  Defaults match the Student's t
    experiment settings."""

    gamma: float = 1e-4
    beta_bar: float = 0.5
    beta_hat: float = 0.3
    beta_tilde: float = 0.8
    eps_bar_0: float = 10.0
    max_iters: int = 50
    cg_max_iters: int = 200
    armijo_max: int = 60

    def __post_init__(self):
        if not 0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 1/2)")
        if not 0 < self.beta_bar < 1:
            raise ValueError("beta_bar must lie in (0, 1)")
        if not 0 < self.beta_hat <= 1:
            raise ValueError("beta_hat must lie in (0, 1]")
        if not 0 < self.beta_tilde < 1:
            raise ValueError("beta_tilde must lie in (0, 1)")


@dataclass
class SubproblemCertificate:
    """Evidence that an inner solve met the outer accuracy condition.

    ``residual_norm`` is the norm of the recovered subgradient
    ``eps_k in partial q(x_hat)``; ``bound`` is the right-hand side it must
    not exceed."""

    residual_norm: float
    bound: float
    x_hat: np.ndarray
    z_hat: Optional[np.ndarray]
    inner_iters: int
    cg_total: int


class SsnSubproblem:
    """Dual form of one x-subproblem with ``H_k = A^T (D + rho I) A + mu_hat I``."""

    def __init__(self, A: LinearOperator, D: np.ndarray, resid_grad: np.ndarray,
                 x_k: np.ndarray, mu_hat: float, c: float, reg: ProxOracle):
        d_min = float(D.min())
        self.rho = 0.0 if d_min > 0 else 0.5 * c - d_min
        scale = np.sqrt(D + self.rho)
        self.A_k = RowScaledOperator(A, scale)
        self.x_k = x_k
        self.b_k = self.A_k.matvec(x_k)
        self.g_k = resid_grad / scale
        self.mu_hat = mu_hat
        self.reg = reg
        self.m = A.shape[0]
        self.n = A.shape[1]

    @classmethod
    def from_hessian_info(cls, info: HessianInfo, x_k, mu_hat, c, reg):
        if not info.is_diagonal_composite or info.resid_grad is None:
            raise ValueError("SSN dual requires the diagonal-composite Hessian form")
        return cls(info.op, info.diag, info.resid_grad, x_k, mu_hat, c, reg)

    def primal_from(self, At_z: np.ndarray) -> np.ndarray:
        """Recover ``x(z) = prox_{g/mu_hat}(x_k - A_k^T z / mu_hat)``."""
        return self.reg.prox(self.x_k - At_z / self.mu_hat, 1.0 / self.mu_hat)

    def dual_grad(self, z: np.ndarray):
        """Gradient of the dual value and the recovered primal point."""
        x_z = self.primal_from(self.A_k.rmatvec(z))
        return -self.A_k.matvec(x_z) + z + self.b_k - self.g_k, x_z

    def dual_value(self, z: np.ndarray) -> float:
        return self._value(z, self.A_k.rmatvec(z))

    def _value(self, z, At_z):
        v = self.x_k - At_z / self.mu_hat
        x_z = self.reg.prox(v, 1.0 / self.mu_hat)
        dz = z - self.g_k
        return (0.5 * float(dz @ dz) + float(At_z @ At_z) / (2.0 * self.mu_hat)
                - self.reg.value(x_z)
                - 0.5 * self.mu_hat * float((x_z - v) @ (x_z - v)))

    def apply_V(self, v_point: np.ndarray, s: np.ndarray) -> np.ndarray:
        """``V s = A_k U A_k^T s / mu_hat + s`` for the Clarke element ``U`` at ``v_point``."""
        w = self.A_k.rmatvec(s)
        u = self.reg.clarke_apply(v_point, 1.0 / self.mu_hat, w)
        return self.A_k.matvec(u) / self.mu_hat + s


def _cg(apply_mat, rhs, tol, max_iters):
    """Conjugate gradient from zero; stops when the residual norm meets ``tol``."""
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rn = np.linalg.norm(r)
    if rn <= tol:
        return x, rn, 0
    p = r.copy()
    rs = rn * rn
    for it in range(1, max_iters + 1):
        Ap = apply_mat(p)
        pAp = float(p @ Ap)
        if pAp <= 0:
            # V >= I makes this impossible in exact arithmetic; stagnation guard.
            break
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        rn = np.sqrt(rs_new)
        if rn <= tol:
            return x, rn, it
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, rn, max_iters


def ssn_solve(sub: SsnSubproblem, cfg: SsnConfig, outer_bound: float,
              grad_target: Optional[float] = None) -> SubproblemCertificate:
    """Run the semismooth Newton iteration until the primal certificate holds.

    The certificate checked after every iterate is
    ``||A_k^T grad_phi(z)|| <= outer_bound * ||x(z) - x_k||``, which is exactly
    the outer accuracy condition with ``eps_k = -A_k^T grad_phi(z)``.  When
    ``grad_target`` is given the dual gradient norm must also fall below it
    (used to drive the dual to near-exactness in tests).
    """
    z = np.zeros(sub.m)
    At_z = np.zeros(sub.n)
    cg_total = 0
    eps_bar = cfg.eps_bar_0
    best = None

    for t in range(cfg.max_iters + 1):
        v = sub.x_k - At_z / sub.mu_hat
        x_z = sub.reg.prox(v, 1.0 / sub.mu_hat)
        grad = -sub.A_k.matvec(x_z) + z + sub.b_k - sub.g_k
        gn = float(np.linalg.norm(grad))
        eps_vec = sub.A_k.rmatvec(grad)
        residual = float(np.linalg.norm(eps_vec))
        bound = outer_bound * float(np.linalg.norm(x_z - sub.x_k))
        if best is None or residual < best.residual_norm:
            best = SubproblemCertificate(residual, bound, x_z, z.copy(), t, cg_total)
        if residual <= bound and (grad_target is None or gn <= grad_target):
            return SubproblemCertificate(residual, bound, x_z, z.copy(), t, cg_total)
        if t == cfg.max_iters:
            break

        tol = min(cfg.beta_bar, gn ** (1.0 + cfg.beta_hat))
        eps_bar = min(eps_bar, gn ** (1.0 + cfg.beta_hat))
        s, cg_resid, cg_iters = _cg(lambda w: sub.apply_V(v, w), -grad,
                                    tol, cfg.cg_max_iters)
        cg_total += cg_iters
        if cg_resid > tol:
            raise InnerSolveError("CG failed to meet the inexactness bound",
                                  best.x_hat, best.residual_norm, best.bound)
        slope = float(grad @ s)
        if slope >= 0:
            raise InnerSolveError("semismooth Newton direction is not a descent direction",
                                  best.x_hat, best.residual_norm, best.bound)

        At_s = sub.A_k.rmatvec(s)
        phi_z = sub._value(z, At_z)
        # Small absolute slack keeps the Armijo test meaningful once the
        # theoretical decrease falls below floating-point resolution.
        ftol = 16.0 * np.finfo(float).eps * (1.0 + abs(phi_z))
        accepted = False
        alpha = 1.0
        for _ in range(cfg.armijo_max + 1):
            z_new = z + alpha * s
            At_new = At_z + alpha * At_s
            if sub._value(z_new, At_new) <= phi_z + cfg.gamma * alpha * slope + ftol:
                accepted = True
                break
            alpha *= cfg.beta_tilde
        if not accepted:
            raise InnerSolveError("dual Armijo line search failed",
                                  best.x_hat, best.residual_norm, best.bound)
        z, At_z = z_new, At_new

    raise InnerSolveError(
        "semismooth Newton ran out of iterations without a certificate",
        best.x_hat, best.residual_norm, best.bound)

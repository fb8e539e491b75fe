"""Proximal-gradient inner solver for the x-subproblem, regularizer-agnostic.

Runs (optionally accelerated) proximal gradient on the strongly convex model
``q(x) = f(x_k) + <grad_k, x - x_k> + (x - x_k)^T H_k (x - x_k) / 2 + g(x)``
and stops at the first iterate whose prox-step optimality residual
``(L_q I - H_k)(x_j - x_{j+1})`` -- an explicit element of ``partial q`` at
``x_{j+1}`` -- is small enough relative to the step from ``x_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ProxOracle
from .ssn import InnerSolveError, SubproblemCertificate


@dataclass
class PgInnerConfig:
    max_iters: int = 20000
    accelerated: bool = False


def pg_inner_solve(grad_k: np.ndarray, apply_Hk, L_q: float, reg: ProxOracle,
                   x_k: np.ndarray, bound_factor: float,
                   cfg: PgInnerConfig | None = None) -> SubproblemCertificate:
    """Certified inexact minimization of the quadratic model plus ``g``.

    ``apply_Hk`` applies the model Hessian; ``L_q`` must upper-bound its
    spectral norm (overestimation only slows convergence).  ``bound_factor``
    is the accuracy coefficient multiplying ``||x_hat - x_k||``.
    """
    if cfg is None:
        cfg = PgInnerConfig()
    if L_q <= 0:
        raise ValueError("L_q must be positive")
    step = 1.0 / L_q
    x = x_k.copy()
    Hd = np.zeros_like(x)  # H_k (x - x_k), maintained alongside x
    y = x
    Hd_y = Hd
    t_acc = 1.0
    for j in range(1, cfg.max_iters + 1):
        x_new = reg.prox(y - step * (grad_k + Hd_y), step)
        Hd_new = apply_Hk(x_new - x_k)
        # eps = (L_q I - H_k)(y - x_new) in partial q(x_new)
        eps = L_q * (y - x_new) - (Hd_y - Hd_new)
        residual = float(np.linalg.norm(eps))
        bound = bound_factor * float(np.linalg.norm(x_new - x_k))
        if residual <= bound:
            return SubproblemCertificate(residual, bound, x_new, None, j, 0)
        if cfg.accelerated:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
            y = x_new + ((t_acc - 1.0) / t_next) * (x_new - x)
            Hd_y = apply_Hk(y - x_k)
            t_acc = t_next
        else:
            y = x_new
            Hd_y = Hd_new
        x, Hd = x_new, Hd_new
    raise InnerSolveError("proximal-gradient inner solver ran out of iterations",
                          x, residual, bound)

"""Student's t data-fit term ``f(x) = sum_i log(1 + (Ax - b)_i^2 / nu)``."""

from __future__ import annotations

import numpy as np

from .operators import LinearOperator
from .problem import HessianInfo, SmoothOracle


def psi_derivatives(y: np.ndarray, nu: float):
    """Value, gradient, and Hessian diagonal of ``psi(y) = sum log(1 + y_i^2/nu)``.

    ``psi'' = 2 (nu - y^2) / (nu + y^2)^2`` is bounded by ``2/nu`` in absolute
    value and goes negative for ``y^2 > nu``, which is what makes the loss
    nonconvex.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    y = np.asarray(y, dtype=float)
    denom = nu + y * y
    value = float(np.sum(np.log1p(y * y / nu)))
    grad = 2.0 * y / denom
    hess_diag = 2.0 * (nu - y * y) / (denom * denom)
    return value, grad, hess_diag


class StudentTLoss(SmoothOracle):
    """Smooth oracle for the Student's t loss composed with a linear operator.

    ``op_norm_sq`` is ``||A||^2`` (exactly 1 for a subsampled orthonormal DCT);
    together with ``|psi''| <= 2/nu`` it gives the gradient Lipschitz bound
    ``L_H = (2/nu) * op_norm_sq``.
    """

    def __init__(self, A: LinearOperator, b: np.ndarray, nu: float,
                 op_norm_sq: float | None = None):
        if b.shape[0] != A.shape[0]:
            raise ValueError("b length must match operator rows")
        if nu <= 0:
            raise ValueError("nu must be positive")
        self.A = A
        self.b = np.asarray(b, dtype=float)
        self.nu = nu
        self.op_norm_sq = A.norm_sq() if op_norm_sq is None else op_norm_sq

    @property
    def lipschitz_grad(self) -> float:
        return 2.0 / self.nu * self.op_norm_sq

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.A.matvec(x) - self.b

    def value(self, x):
        r = self.residual(x)
        return float(np.sum(np.log1p(r * r / self.nu)))

    def gradient(self, x):
        r = self.residual(x)
        return self.A.rmatvec(2.0 * r / (self.nu + r * r))

    def hessian_info(self, x):
        r = self.residual(x)
        _, grad, hess_diag = psi_derivatives(r, self.nu)
        lam_lb = min(0.0, float(hess_diag.min())) * self.op_norm_sq
        return HessianInfo(lambda_min_lower_bound=lam_lb, diag=hess_diag,
                           op=self.A, op_norm_sq=self.op_norm_sq,
                           resid_grad=grad)

    def diff_from_resid(self, r: np.ndarray, e: np.ndarray) -> float:
        """``f`` difference for a residual-space step ``e = A s``, given ``r = Ax - b``.

        Uses ``log((nu + (r+e)^2)/(nu + r^2)) = log1p((2 r e + e^2)/(nu + r^2))``,
        which stays accurate when the step is far below the objective scale.
        """
        return float(np.sum(np.log1p((2.0 * r + e) * e / (self.nu + r * r))))

    def value_diff(self, x, s):
        return self.diff_from_resid(self.residual(x), self.A.matvec(s))

"""Composite-problem abstraction: smooth oracle, prox oracle, KKT residual."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import LinearOperator


class OracleError(RuntimeError):
    """An oracle returned a non-finite value where a finite one was required."""


@dataclass
class HessianInfo:
    """Curvature information of the smooth part at a point.

    Either ``dense`` holds an explicit n-by-n Hessian, or (``diag``, ``op``)
    describe the composite form ``A^T diag(d) A`` with ``d`` the second
    derivatives of the outer function at the residual.  ``resid_grad`` carries
    the outer gradient at the residual when the composite form is used, so the
    dual subproblem can be assembled without an extra operator application.

    ``lambda_min_lower_bound`` is a (possibly conservative) lower bound on the
    smallest eigenvalue; for the composite form it is
    ``min(0, min_i d_i) * ||A||^2``.
    """

    lambda_min_lower_bound: float
    dense: Optional[np.ndarray] = None
    diag: Optional[np.ndarray] = None
    op: Optional[LinearOperator] = None
    op_norm_sq: float = 1.0
    resid_grad: Optional[np.ndarray] = None

    @property
    def is_diagonal_composite(self) -> bool:
        return self.diag is not None


class SmoothOracle:
    """Oracle for a twice continuously differentiable function."""

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian_info(self, x: np.ndarray) -> HessianInfo:
        raise NotImplementedError

    def value_diff(self, x: np.ndarray, s: np.ndarray) -> float:
        """Return ``f(x + s) - f(x)``.

        Subclasses may override with a cancellation-free formula; the default
        subtracts the two values, which loses accuracy for tiny steps.
        """
        return self.value(x + s) - self.value(x)


class ProxOracle:
    """Oracle for a proper closed convex regularizer with computable prox."""

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, u: np.ndarray, t: float) -> np.ndarray:
        """``argmin_x { g(x) + ||x - u||^2 / (2 t) }``."""
        raise NotImplementedError

    def clarke_apply(self, v: np.ndarray, t: float, w: np.ndarray) -> np.ndarray:
        """Apply one element of the Clarke Jacobian of ``prox(., t)`` at ``v`` to ``w``."""
        raise NotImplementedError

    def value_diff(self, x: np.ndarray, s: np.ndarray) -> float:
        """Return ``g(x + s) - g(x)``, overridable for accuracy."""
        return self.value(x + s) - self.value(x)


@dataclass
class CompositeProblem:
    """Pairing of a smooth oracle and a prox-capable convex regularizer."""

    smooth: SmoothOracle
    reg: ProxOracle
    n: int
    lipschitz_grad: Optional[float] = None


def objective(problem: CompositeProblem, x: np.ndarray) -> float:
    """``phi(x) = f(x) + g(x)``, with ``+inf`` outside the effective domain."""
    gval = problem.reg.value(x)
    if gval == np.inf:
        return np.inf
    fval = problem.smooth.value(x)
    if not np.isfinite(fval):
        raise OracleError("smooth value is not finite")
    return fval + gval


def objective_diff(problem: CompositeProblem, x: np.ndarray, s: np.ndarray) -> float:
    """``phi(x + s) - phi(x)`` via the oracles' cancellation-free paths."""
    return problem.smooth.value_diff(x, s) + problem.reg.value_diff(x, s)


def kkt_residual(problem: CompositeProblem, x: np.ndarray,
                 grad: Optional[np.ndarray] = None) -> np.ndarray:
    """KKT residual mapping ``G(x) = x - prox_g(x - grad f(x))``.

    ``G(x) = 0`` exactly at the stationary points.  ``grad`` may be supplied
    to reuse an already computed gradient.
    """
    if grad is None:
        grad = problem.smooth.gradient(x)
    if not np.all(np.isfinite(grad)):
        raise OracleError("gradient is not finite")
    return x - problem.reg.prox(x - grad, 1.0)

"""Shared fixtures and reference oracles for the test suite.

The reference solvers here are deliberately independent of the library code
they check: scalar golden-section search, grid refinement, finite
differences, and a long-run FISTA on the explicit subproblem objective.
"""

from __future__ import annotations

import numpy as np
import pytest

from ipnsolve import DenseOperator


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# reference minimizers
# ---------------------------------------------------------------------------

def golden_section(fun, lo: float, hi: float, tol: float = 1e-12,
                   max_iters: int = 200) -> float:
    """Scalar golden-section minimization of a unimodal function.

    Runs in extended precision: value-comparison search can only localize the
    minimizer to about sqrt(machine epsilon), so 80-bit arithmetic is needed
    for 1e-8 accuracy in the argument.
    """
    invphi = (np.sqrt(np.longdouble(5.0)) - 1.0) / 2.0
    a, b = np.longdouble(lo), np.longdouble(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return float(0.5 * (a + b))


def golden_section_batch(fun, lo: np.ndarray, hi: np.ndarray,
                         iters: int = 90) -> np.ndarray:
    """Vectorized golden-section minimization of many scalar problems at once.

    ``fun`` maps an array of points (one per problem) to an array of values.
    Runs in extended precision for the same reason as :func:`golden_section`.
    """
    invphi = (np.sqrt(np.longdouble(5.0)) - 1.0) / 2.0
    a = lo.astype(np.longdouble)
    b = hi.astype(np.longdouble)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        c_new = np.where(left, b - invphi * (b - a), d)
        d_new = np.where(left, c, a + invphi * (b - a))
        probe = np.where(left, c_new, d_new)
        f_probe = fun(probe)
        fc, fd = (np.where(left, f_probe, fd), np.where(left, fc, f_probe))
        c, d = c_new, d_new
    return (0.5 * (a + b)).astype(float)


def grid_refine(fun, center: np.ndarray, radius: float, rounds: int = 24,
                points: int = 21, zoom: float = 2.5) -> np.ndarray:
    """Coordinate-grid refinement minimization in 2 or 3 dimensions.

    ``fun`` must accept a (num_points, dim) array and return one value per
    row.  The origin is always kept in the candidate set because the group
    regularizer has its kink there.

    For a convex objective the grid argmin lies within about one grid spacing
    of the true minimizer, so ``zoom`` must stay well below half the per-side
    point count or the refined window can exclude the minimizer.
    """
    dim = center.shape[0]
    assert zoom <= (points - 1) / (4.0 * np.sqrt(dim))
    unit = np.linspace(-1.0, 1.0, points)
    best = center.astype(np.longdouble).copy()
    r = np.longdouble(radius)
    for _ in range(rounds):
        # extended precision once the window is small: value comparisons in
        # double precision cannot localize a minimizer beyond ~sqrt(eps)
        dtype = np.longdouble if r < 1e-4 * radius else float
        grids = np.meshgrid(*[(best[i] + unit * r).astype(dtype)
                              for i in range(dim)], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = np.vstack([pts, np.zeros((1, dim), dtype=dtype)])
        vals = fun(pts)
        best = pts[int(np.argmin(vals))].astype(np.longdouble)
        r /= zoom
    return best.astype(float)


def fista_reference(grad_quad, L, prox, x0, iters=50000):
    """Long-run FISTA on ``q(x) = quadratic + g`` with exact Lipschitz ``L``.

    ``grad_quad`` returns the gradient of the smooth quadratic part; ``prox``
    is the regularizer prox with parameter ``1/L``.
    """
    x = x0.copy()
    y = x0.copy()
    t = 1.0
    step = 1.0 / L
    for _ in range(iters):
        x_new = prox(y - step * grad_quad(y), step)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
    return x


def central_diff(fun, x: np.ndarray, h: np.ndarray, t: float = 1e-6) -> float:
    return (fun(x + t * h) - fun(x - t * h)) / (2.0 * t)


# ---------------------------------------------------------------------------
# small shared instances
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def small_instance():
    """Deterministic n=512 l1 instance used by several solver tests."""
    from ipnsolve.harness import InstanceSpec, generate_instance
    return generate_instance(
        InstanceSpec(n=512, seed=3, dynamic_range_db=20.0, nu=0.25))


@pytest.fixture(scope="session")
def small_group_instance():
    from ipnsolve.harness import InstanceSpec, generate_instance
    return generate_instance(
        InstanceSpec(n=512, family="group", l=16, s=4, seed=5, nu=0.2))


def random_dense_operator(rng, m, n, scale=1.0):
    return DenseOperator(scale * rng.standard_normal((m, n)) / np.sqrt(n))

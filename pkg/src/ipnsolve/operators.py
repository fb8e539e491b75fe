"""Matrix-free linear operators: dense matrices and subsampled orthonormal DCT."""

from __future__ import annotations

import numpy as np
from scipy.fft import dct, idct


class LinearOperator:
    """Abstract m-by-n linear map with forward and adjoint application."""

    shape: tuple[int, int]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norm_sq(self) -> float:
        """Upper estimate of the squared spectral norm ``||A||^2``."""
        raise NotImplementedError


def power_iteration_norm_sq(matvec, rmatvec, n: int, iters: int = 50,
                            tol: float = 1e-10, seed: int = 0) -> float:
    """Estimate ``||A||^2`` by power iteration on ``A^T A``.

    Deterministic: the start vector is drawn from a fixed-seed generator.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = rmatvec(matvec(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return max(lam, 0.0)


class DenseOperator(LinearOperator):
    """Linear operator backed by an explicit matrix. Meant for small problems."""

    def __init__(self, mat: np.ndarray):
        self.mat = np.asarray(mat, dtype=float)
        self.shape = self.mat.shape
        self._norm_sq = None

    def matvec(self, x):
        return self.mat @ x

    def rmatvec(self, y):
        return self.mat.T @ y

    def norm_sq(self):
        if self._norm_sq is None:
            self._norm_sq = power_iteration_norm_sq(
                self.matvec, self.rmatvec, self.shape[1])
        return self._norm_sq


def dct_forward(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II of ``x`` restricted to the index set ``rows``."""
    n = x.shape[0]
    rows = np.asarray(rows)
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        raise ValueError("row index out of range")
    return dct(x, type=2, norm="ortho")[rows]


def dct_adjoint(y: np.ndarray, rows: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of :func:`dct_forward`: zero-pad into ``rows``, inverse DCT."""
    rows = np.asarray(rows)
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        raise ValueError("row index out of range")
    full = np.zeros(n)
    full[rows] = y
    return idct(full, type=2, norm="ortho")


class DctSubsampledOperator(LinearOperator):
    """Row-subsampled orthonormal DCT-II: ``A x = (dct(x))_J``.

    Rows are orthonormal, so ``A A^T = I`` and ``||A|| = 1`` exactly.
    """

    def __init__(self, n: int, rows):
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        if rows.size == 0:
            raise ValueError("empty row set")
        if rows[0] < 0 or rows[-1] >= n:
            raise ValueError("row index out of range")
        if np.any(np.diff(rows) == 0):
            raise ValueError("duplicate row index")
        self.n = n
        self.rows = rows
        self.shape = (rows.size, n)

    def matvec(self, x):
        return dct(x, type=2, norm="ortho")[self.rows]

    def rmatvec(self, y):
        full = np.zeros(self.n)
        full[self.rows] = y
        return idct(full, type=2, norm="ortho")

    def norm_sq(self):
        return 1.0


class RowScaledOperator(LinearOperator):
    """``diag(s) @ A`` for a row-scale vector ``s`` (used for ``A_k`` in the SSN dual)."""

    def __init__(self, base: LinearOperator, scale: np.ndarray):
        if scale.shape[0] != base.shape[0]:
            raise ValueError("scale length must match operator rows")
        self.base = base
        self.scale = scale
        self.shape = base.shape

    def matvec(self, x):
        return self.scale * self.base.matvec(x)

    def rmatvec(self, y):
        return self.base.rmatvec(self.scale * y)

    def norm_sq(self):
        return power_iteration_norm_sq(self.matvec, self.rmatvec, self.shape[1])

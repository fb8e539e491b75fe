"""Concrete regularizers: weighted l1, group-l2, and the zero function."""

from __future__ import annotations

import numpy as np

from .problem import ProxOracle


def prox_l1(u: np.ndarray, t: float, lam: float) -> np.ndarray:
    """Componentwise soft threshold at level ``t * lam``."""
    if t <= 0:
        raise ValueError("prox parameter t must be positive")
    s = t * lam
    return np.sign(u) * np.maximum(np.abs(u) - s, 0.0)


def clarke_element_l1(v: np.ndarray, t: float, lam: float) -> np.ndarray:
    """Diagonal of one Clarke-Jacobian element of the soft threshold.

    Zero where ``|v_i| <= t * lam`` (ties resolved to zero), one elsewhere.
    """
    if t <= 0:
        raise ValueError("prox parameter t must be positive")
    return (np.abs(v) > t * lam).astype(float)


class L1Reg(ProxOracle):
    """``g(x) = lam * ||x||_1``."""

    def __init__(self, lam: float):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = lam

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def value_diff(self, x, s):
        # |x_i + s_i| - |x_i| equals sign(x_i) * s_i unless the sign flips;
        # using that identity avoids cancellation for tiny steps.
        xs = x + s
        flip = (x * xs) < 0
        d = np.where(flip, np.abs(xs) - np.abs(x),
                     np.where(x != 0, np.sign(x) * s, np.abs(s)))
        return self.lam * float(np.sum(d))

    def prox(self, u, t):
        return prox_l1(u, t, self.lam)

    def clarke_apply(self, v, t, w):
        return clarke_element_l1(v, t, self.lam) * w


def _group_norms(x: np.ndarray, groups) -> np.ndarray:
    return np.array([np.linalg.norm(x[g]) for g in groups])


def prox_group(u: np.ndarray, t: float, groups, lam: float) -> np.ndarray:
    """Blockwise shrinkage: each block scaled by ``max(1 - t*lam/||u_J||, 0)``."""
    if t <= 0:
        raise ValueError("prox parameter t must be positive")
    s = t * lam
    out = np.zeros_like(u)
    for g in groups:
        nrm = np.linalg.norm(u[g])
        if nrm > s:
            out[g] = u[g] * (1.0 - s / nrm)
    return out


class GroupL2Reg(ProxOracle):
    """``g(x) = lam * sum_i ||x_{J_i}||`` over a partition ``J_1..J_l`` of the indices."""

    def __init__(self, lam: float, groups):
        if lam <= 0:
            raise ValueError("lam must be positive")
        groups = [np.asarray(g, dtype=np.int64) for g in groups]
        flat = np.concatenate(groups)
        if flat.size != np.unique(flat).size:
            raise ValueError("groups must be pairwise disjoint")
        n = flat.size
        if not np.array_equal(np.sort(flat), np.arange(n)):
            raise ValueError("groups must partition 0..n-1")
        self.lam = lam
        self.groups = groups
        self.n = n

    def value(self, x):
        return self.lam * float(np.sum(_group_norms(x, self.groups)))

    def value_diff(self, x, s):
        # ||xJ + sJ|| - ||xJ|| rationalized to (2 <xJ, sJ> + ||sJ||^2) / (sum of norms).
        total = 0.0
        for g in self.groups:
            xg, sg = x[g], s[g]
            a = np.linalg.norm(xg + sg)
            b = np.linalg.norm(xg)
            if a + b == 0.0:
                continue
            total += (2.0 * float(xg @ sg) + float(sg @ sg)) / (a + b)
        return self.lam * total

    def prox(self, u, t):
        return prox_group(u, t, self.groups, self.lam)

    def clarke_apply(self, v, t, w):
        # Per block with s = t*lam: zero if ||v_J|| <= s (tie to zero, as for l1),
        # else (1 - s/||v||) I + (s/||v||^3) v v^T restricted to the block.
        if t <= 0:
            raise ValueError("prox parameter t must be positive")
        s = t * self.lam
        out = np.zeros_like(w)
        for g in self.groups:
            vg = v[g]
            nrm = np.linalg.norm(vg)
            if nrm > s:
                wg = w[g]
                out[g] = (1.0 - s / nrm) * wg + (s / nrm**3) * float(vg @ wg) * vg
        return out


class ZeroReg(ProxOracle):
    """``g == 0``; prox is the identity."""

    def value(self, x):
        return 0.0

    def value_diff(self, x, s):
        return 0.0

    def prox(self, u, t):
        if t <= 0:
            raise ValueError("prox parameter t must be positive")
        return np.asarray(u, dtype=float).copy()

    def clarke_apply(self, v, t, w):
        return np.asarray(w, dtype=float).copy()

"""Outer loops: inexact proximal Newton with/without line search, the adaptive
Lipschitz variant, a proximal-gradient baseline, and the smooth reduction.

Every checkable per-iteration inequality from the analysis is re-evaluated at
runtime and recorded on the iteration trace: the residual-vs-step bound
``||G(x_k)|| <= eta * ||d_k||``, the line-search decrease, the step-size
floor, and the telescoped rate certificate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .operators import LinearOperator
from .pginner import PgInnerConfig, pg_inner_solve
from .problem import CompositeProblem, kkt_residual, objective, objective_diff
from .regularizers import ZeroReg
from .ssn import InnerSolveError, SsnConfig, SsnSubproblem, SubproblemCertificate, ssn_solve

APPENDIX = "appendix"
EIGENSHIFT = "eigenshift"
PROVIDED = "provided"

AUDIT_KEYS = ("eta_bound", "decrease", "alpha_floor", "rate_certificate")


class OuterFailure(RuntimeError):
    """The outer loop detected an inconsistency (line-search cap, bad L_H, ...)."""


@dataclass
class OuterConfig:
    """Scalar parameters of the outer loops.

    ``lh_known`` switches to the no-line-search variant (known gradient
    Lipschitz constant); ``lh_adaptive_u0`` switches to the adaptive variant
    that doubles/halves a running estimate.  ``tau`` defaults to
    ``min(1e-4, c/2)``.
    """

    c: float = 0.05
    tau: Optional[float] = None
    mu1: float = 0.1
    mu2: float = 0.1
    delta: float = 0.95
    theta: float = 0.6
    eps0: float = 1e-5
    max_outer_iters: int = 1000
    max_wall_seconds: float = 1800.0
    hessian_policy: str = APPENDIX
    lh_known: Optional[float] = None
    lh_adaptive_u0: Optional[float] = None
    provided_bk: Optional[tuple[Callable, float]] = None  # (apply, norm bound)
    ssn: SsnConfig = field(default_factory=SsnConfig)
    pg: PgInnerConfig = field(default_factory=PgInnerConfig)
    ls_max_trials: int = 100
    doubling_cap: int = 80
    audit_slack: float = 1.01

    def __post_init__(self):
        if self.tau is None:
            self.tau = min(1e-4, 0.5 * self.c)
        if self.c <= 0:
            raise ValueError("c must be positive")
        if not 0 < self.tau < self.c:
            raise ValueError("tau must lie in (0, c)")
        if not 0 < self.mu1 <= 1:
            raise ValueError("mu1 must lie in (0, 1]")
        if not 0 < self.mu2 <= self.mu1:
            raise ValueError("mu2 must lie in (0, mu1]")
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if self.lh_known is not None and self.lh_adaptive_u0 is not None:
            raise ValueError("choose at most one of lh_known / lh_adaptive_u0")
        if self.hessian_policy not in (APPENDIX, EIGENSHIFT, PROVIDED):
            raise ValueError(f"unknown hessian policy {self.hessian_policy!r}")


@dataclass
class IterationRecord:
    k: int
    phi: float
    g_norm: float
    d_norm: float = 0.0
    alpha: float = 0.0
    ls_trials: int = 0
    inner_iters: int = 0
    cg_total: int = 0
    cert_residual: float = 0.0
    cert_bound: float = 0.0
    eta_hat_check: bool = True
    decrease_check: bool = True
    alpha_floor_check: bool = True
    rate_check: bool = True
    lh_current: float = float("nan")
    doublings: int = 0
    wall_ms: float = 0.0


@dataclass
class RunReport:
    records: list[IterationRecord]
    final_x: np.ndarray
    status: str  # converged | iter_cap | time_cap | inner_failure
    final_phi: float
    final_g_norm: float
    audit_violations: dict[str, int]
    rate_certificate: float  # max over k of sum ||G||^2 / (eta * (phi_0 - phi_{k+1}))
    superlinear_tail: list[float]
    wall_s: float
    total_doublings: int = 0

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def clean(self) -> bool:
        return all(v == 0 for v in self.audit_violations.values())


def _tail_ratios(g_norms, count=3):
    ratios = [g_norms[i + 1] / g_norms[i]
              for i in range(len(g_norms) - 1) if g_norms[i] > 0]
    return ratios[-count:]


def _sym_norm_est(apply_op, n, iters=20, seed=7):
    """Spectral-norm estimate of a symmetric PSD operator by power iteration."""
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = apply_op(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / nw
    return max(lam, 0.0)


@dataclass
class HkModel:
    """One iteration's quadratic-model Hessian ``H_k = B_k + ridge * I``."""

    apply_B: Callable
    ridge: float
    bk_norm_bound: float
    bk_norm_est: float
    rho: float = 0.0
    ssn_sub: Optional[SsnSubproblem] = None

    def apply(self, w):
        return self.apply_B(w) + self.ridge * w


def build_hk(problem: CompositeProblem, x: np.ndarray, g_norm: float,
             cfg: OuterConfig, lh_term: float = 0.0) -> HkModel:
    """Assemble the model Hessian for the configured policy.

    The ridge is ``c + mu1 * min(1, ||G||^delta)`` plus the Lipschitz term of
    the no-line-search / adaptive variants.
    """
    ridge = cfg.c + cfg.mu1 * min(1.0, g_norm ** cfg.delta) + lh_term

    if cfg.hessian_policy == PROVIDED:
        if cfg.provided_bk is None:
            raise ValueError("provided_bk required for the 'provided' policy")
        apply_B, norm_bound = cfg.provided_bk
        return HkModel(apply_B, ridge, norm_bound, norm_bound)

    info = problem.smooth.hessian_info(x)

    if cfg.hessian_policy == APPENDIX:
        if not info.is_diagonal_composite:
            raise ValueError("appendix policy requires the diagonal-composite Hessian")
        D, A = info.diag, info.op
        d_min = float(D.min())
        rho = 0.0 if d_min > 0 else 0.5 * cfg.c - d_min
        scaled = D + rho

        def apply_B(w, A=A, scaled=scaled):
            return A.rmatvec(scaled * A.matvec(w))

        bound = float(scaled.max()) * info.op_norm_sq
        est = _sym_norm_est(apply_B, problem.n)
        sub = SsnSubproblem(A, D, info.resid_grad, x, ridge, cfg.c, problem.reg)
        return HkModel(apply_B, ridge, bound, est, rho, sub)

    # eigenshift: B_k = hessian + [-lambda_min]_+ I
    if info.dense is not None:
        eigs = np.linalg.eigvalsh(info.dense)
        shift = max(0.0, -float(eigs[0]))
        H = info.dense

        def apply_B(w, H=H, shift=shift):
            return H @ w + shift * w

        norm = float(eigs[-1]) + shift
        return HkModel(apply_B, ridge, norm, norm, shift)

    shift = max(0.0, -info.lambda_min_lower_bound)
    D, A = info.diag, info.op

    def apply_B(w, A=A, D=D, shift=shift):
        return A.rmatvec(D * A.matvec(w)) + shift * w

    bound = max(abs(float(D.max())), abs(float(D.min()))) * info.op_norm_sq + shift
    est = _sym_norm_est(apply_B, problem.n)
    return HkModel(apply_B, ridge, bound, est, shift)


def _solve_inner(problem, x, grad, model: HkModel, bound_factor, cfg: OuterConfig,
                 inner: str) -> SubproblemCertificate:
    if inner == "ssn":
        if model.ssn_sub is None:
            raise ValueError("SSN inner solver needs the appendix Hessian policy")
        return ssn_solve(model.ssn_sub, cfg.ssn, bound_factor)
    L_q = model.bk_norm_bound + model.ridge
    return pg_inner_solve(grad, model.apply, L_q, problem.reg, x,
                          bound_factor, cfg.pg)


def _phi_diff(problem, x, d, alpha, resid=None, e_d=None):
    """Objective difference ``phi(x + alpha d) - phi(x)`` along a fixed direction.

    Uses the residual-space fast path of the Student's t loss when available
    (``resid`` and ``e_d = A d`` precomputed), so backtracking trials cost no
    operator applications.
    """
    if resid is not None and e_d is not None:
        df = problem.smooth.diff_from_resid(resid, alpha * e_d)
        return df + problem.reg.value_diff(x, alpha * d)
    return objective_diff(problem, x, alpha * d)


def run(problem: CompositeProblem, x0: np.ndarray, cfg: OuterConfig,
        inner: Optional[str] = None) -> RunReport:
    """Run the proximal Newton outer loop selected by ``cfg``.

    Line-search variant when no Lipschitz information is configured, unit
    steps when ``lh_known`` is set, doubling/halving on ``lh_adaptive_u0``.
    """
    if inner is None:
        inner = "ssn" if cfg.hessian_policy == APPENDIX else "pg"
    mode = ("alg2" if cfg.lh_known is not None
            else "alg3" if cfg.lh_adaptive_u0 is not None else "alg1")
    has_resid_path = hasattr(problem.smooth, "diff_from_resid")

    t0 = time.perf_counter()
    x = x0.copy()
    phi0 = objective(problem, x0)
    phi = phi0
    records: list[IterationRecord] = []
    g_norms: list[float] = []
    viol = {key: 0 for key in AUDIT_KEYS}
    sum_gsq = 0.0
    m_run = 0.0
    rate_cert = 0.0
    total_doublings = 0
    lh_k = cfg.lh_adaptive_u0 if mode == "alg3" else None
    status = "iter_cap"
    slack = cfg.audit_slack
    lh_audit = problem.lipschitz_grad

    for k in range(cfg.max_outer_iters):
        grad = problem.smooth.gradient(x)
        Gx = kkt_residual(problem, x, grad)
        gn = float(np.linalg.norm(Gx))
        g_norms.append(gn)
        if gn <= cfg.eps0:
            status = "converged"
            break
        if time.perf_counter() - t0 > cfg.max_wall_seconds:
            status = "time_cap"
            break

        lh_term = (cfg.lh_known if mode == "alg2"
                   else lh_k if mode == "alg3" else 0.0)
        bound_factor = 0.5 * cfg.mu2 * min(1.0, gn ** cfg.delta)
        doublings = 0
        try:
            model = build_hk(problem, x, gn, cfg, lh_term)
            cert = _solve_inner(problem, x, grad, model, bound_factor, cfg, inner)
            if mode == "alg3":
                while True:
                    d = cert.x_hat - x
                    dn2 = float(d @ d)
                    f_tilde = (problem.smooth.value_diff(x, d) - float(grad @ d)
                               - 0.5 * lh_k * dn2)
                    if f_tilde <= 0.0 or dn2 == 0.0:
                        break
                    doublings += 1
                    if doublings > cfg.doubling_cap:
                        raise OuterFailure("adaptive L_H doubling cap exceeded")
                    lh_k *= 2.0
                    model = build_hk(problem, x, gn, cfg, lh_k)
                    cert = _solve_inner(problem, x, grad, model, bound_factor,
                                        cfg, inner)
                total_doublings += doublings
        except InnerSolveError as err:
            records.append(IterationRecord(
                k=k, phi=phi, g_norm=gn,
                wall_ms=(time.perf_counter() - t0) * 1e3))
            return RunReport(records, x, "inner_failure", phi, gn, viol,
                             rate_cert, _tail_ratios(g_norms),
                             time.perf_counter() - t0, total_doublings)

        d = cert.x_hat - x
        dn = float(np.linalg.norm(d))
        if dn == 0.0:
            # certified zero step forces ||G(x_k)|| = 0; treat as converged
            status = "converged"
            break

        resid = problem.smooth.residual(x) if has_resid_path else None
        e_d = problem.smooth.A.matvec(d) if has_resid_path else None

        if mode == "alg1":
            alpha = 1.0
            ls = 0
            accepted = False
            for j in range(cfg.ls_max_trials + 1):
                alpha = cfg.theta ** j
                dphi = _phi_diff(problem, x, d, alpha, resid, e_d)
                if dphi <= -0.5 * cfg.tau * alpha * dn * dn:
                    ls = j
                    accepted = True
                    break
            if not accepted:
                raise OuterFailure("backtracking line search exceeded its trial cap")
        else:
            alpha = 1.0
            ls = 0
            dphi = _phi_diff(problem, x, d, 1.0, resid, e_d)

        # --- per-iteration inequality audits ---
        m_run = max(m_run, model.bk_norm_est)
        if mode == "alg1":
            eta = 3.0 + model.bk_norm_est + cfg.c
        else:
            eta = 3.0 + model.bk_norm_est + lh_term
        eta_ok = gn <= slack * eta * dn

        abs_tol = 64.0 * np.finfo(float).eps * (1.0 + abs(phi))
        if mode == "alg1":
            dec_ok = -dphi * slack + abs_tol >= 0.5 * cfg.tau * alpha * dn * dn
            floor_ok = True
            if lh_audit is not None:
                floor_ok = alpha * slack >= cfg.theta * (cfg.c - cfg.tau) / lh_audit
        else:
            dec_ok = -dphi * slack + abs_tol >= 0.5 * cfg.c * dn * dn
            floor_ok = True
            if mode == "alg2" and not dec_ok:
                raise OuterFailure(
                    "no-line-search decrease audit failed: supplied L_H too small")

        phi_next = phi + dphi
        sum_gsq += gn * gn
        rate_ok = True
        if mode == "alg1":
            if lh_audit is not None:
                eta_hat_run = 3.0 + m_run + cfg.c
                eta_tilde = (2.0 * lh_audit * eta_hat_run ** 2
                             / (cfg.tau * cfg.theta * (cfg.c - cfg.tau)))
                denom = eta_tilde * (phi0 - phi_next)
                if denom > 0:
                    rate_cert = max(rate_cert, sum_gsq / denom)
                rate_ok = sum_gsq <= slack * denom + abs_tol
        else:
            eta_bar_run = m_run + lh_term + 3.0
            zeta = 2.0 * eta_bar_run ** 2 / cfg.c
            denom = zeta * (phi0 - phi_next)
            if denom > 0:
                rate_cert = max(rate_cert, sum_gsq / denom)
            rate_ok = sum_gsq <= slack * denom + abs_tol

        for key, ok in zip(AUDIT_KEYS, (eta_ok, dec_ok, floor_ok, rate_ok)):
            if not ok:
                viol[key] += 1

        records.append(IterationRecord(
            k=k, phi=phi, g_norm=gn, d_norm=dn, alpha=alpha, ls_trials=ls,
            inner_iters=cert.inner_iters, cg_total=cert.cg_total,
            cert_residual=cert.residual_norm, cert_bound=cert.bound,
            eta_hat_check=eta_ok, decrease_check=dec_ok,
            alpha_floor_check=floor_ok, rate_check=rate_ok,
            lh_current=lh_term if mode in ("alg2", "alg3") else float("nan"),
            doublings=doublings,
            wall_ms=(time.perf_counter() - t0) * 1e3))

        x = x + alpha * d if mode == "alg1" else cert.x_hat
        phi = phi_next
        if mode == "alg3":
            lh_k = max(0.5 * lh_k, cfg.lh_adaptive_u0)

    final_gn = g_norms[-1] if g_norms else float(np.linalg.norm(
        kkt_residual(problem, x)))
    return RunReport(records, x, status, phi, final_gn, viol, rate_cert,
                     _tail_ratios(g_norms), time.perf_counter() - t0,
                     total_doublings)


def pgm_baseline(problem: CompositeProblem, x0: np.ndarray, step: float,
                 eps0: float = 1e-5, max_iters: int = 500000,
                 max_wall_seconds: float = 1800.0) -> RunReport:
    """Plain proximal gradient with fixed step, same stopping and logging."""
    if step <= 0:
        raise ValueError("step must be positive")
    if problem.lipschitz_grad is not None and step > 1.0 / problem.lipschitz_grad:
        raise ValueError("step must not exceed 1/L_H")
    t0 = time.perf_counter()
    x = x0.copy()
    phi = objective(problem, x0)
    records = []
    g_norms = []
    status = "iter_cap"
    for k in range(max_iters):
        grad = problem.smooth.gradient(x)
        Gx = kkt_residual(problem, x, grad)
        gn = float(np.linalg.norm(Gx))
        g_norms.append(gn)
        if gn <= eps0:
            status = "converged"
            break
        if time.perf_counter() - t0 > max_wall_seconds:
            status = "time_cap"
            break
        x_new = problem.reg.prox(x - step * grad, step)
        d = x_new - x
        dphi = objective_diff(problem, x, d)
        records.append(IterationRecord(
            k=k, phi=phi, g_norm=gn, d_norm=float(np.linalg.norm(d)),
            alpha=1.0, wall_ms=(time.perf_counter() - t0) * 1e3))
        x = x_new
        phi += dphi
    final_gn = g_norms[-1] if g_norms else float("nan")
    return RunReport(records, x, status, phi, final_gn,
                     {key: 0 for key in AUDIT_KEYS}, 0.0,
                     _tail_ratios(g_norms), time.perf_counter() - t0)


def regularized_newton(problem: CompositeProblem, x0: np.ndarray,
                       cfg: OuterConfig) -> RunReport:
    """The ``g == 0`` reduction: inexact regularized Newton via CG.

    The direction satisfies the relative residual stop
    ``||(hess + sigma I) d + grad|| <= (mu2/2) min(1, ||grad||^delta) ||d||``,
    re-checked after every CG iteration.  Line-search mode unless ``lh_known``
    is set, in which case unit steps are taken and the Lipschitz term joins
    the shift.
    """
    if not isinstance(problem.reg, ZeroReg):
        raise ValueError("regularized Newton reduction requires the zero regularizer")
    t0 = time.perf_counter()
    x = x0.copy()
    phi = objective(problem, x0)
    phi0 = phi
    records = []
    g_norms = []
    viol = {key: 0 for key in AUDIT_KEYS}
    status = "iter_cap"
    unit_step = cfg.lh_known is not None
    for k in range(cfg.max_outer_iters):
        grad = problem.smooth.gradient(x)
        gn = float(np.linalg.norm(grad))
        g_norms.append(gn)
        if gn <= cfg.eps0:
            status = "converged"
            break
        info = problem.smooth.hessian_info(x)
        if info.dense is None:
            raise ValueError("regularized Newton needs an explicit Hessian")
        H = info.dense
        lam_min = float(np.linalg.eigvalsh(H)[0])
        sigma = (max(0.0, -lam_min) + cfg.c
                 + cfg.mu1 * min(1.0, gn ** cfg.delta)
                 + (cfg.lh_known if unit_step else 0.0))
        bound_factor = 0.5 * cfg.mu2 * min(1.0, gn ** cfg.delta)
        d, resid, cg_iters = _cg_relative(H, sigma, -grad, bound_factor)
        if d is None:
            raise OuterFailure("regularized-Newton CG failed its relative stop")
        dn = float(np.linalg.norm(d))
        if unit_step:
            alpha, ls = 1.0, 0
            dphi = problem.smooth.value_diff(x, d)
        else:
            accepted = False
            for j in range(cfg.ls_max_trials + 1):
                alpha = cfg.theta ** j
                dphi = problem.smooth.value_diff(x, alpha * d)
                if dphi <= -0.5 * cfg.tau * alpha * dn * dn:
                    ls = j
                    accepted = True
                    break
            if not accepted:
                raise OuterFailure("regularized-Newton line search exceeded its cap")
        records.append(IterationRecord(
            k=k, phi=phi, g_norm=gn, d_norm=dn, alpha=alpha, ls_trials=ls,
            cg_total=cg_iters, cert_residual=resid,
            cert_bound=bound_factor * dn,
            wall_ms=(time.perf_counter() - t0) * 1e3))
        x = x + alpha * d
        phi += dphi
    final_gn = g_norms[-1] if g_norms else float("nan")
    return RunReport(records, x, status, phi, final_gn, viol, 0.0,
                     _tail_ratios(g_norms), time.perf_counter() - t0)


def _cg_relative(H, sigma, rhs, bound_factor, max_iters=1000):
    """CG on ``(H + sigma I) d = rhs`` stopping on the step-relative residual."""
    n = rhs.shape[0]
    d = np.zeros(n)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    for it in range(1, max_iters + 1):
        Ap = H @ p + sigma * p
        alpha = rs / float(p @ Ap)
        d += alpha * p
        r -= alpha * Ap
        rn = float(np.linalg.norm(r))
        dn = float(np.linalg.norm(d))
        if rn <= bound_factor * dn:
            return d, rn, it
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return None, rn, max_iters

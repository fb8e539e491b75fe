"""Instance generation and experiment orchestration for the sparse
Student's t-regression families, plus the on-disk instance format and the
delimited per-iteration / summary outputs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .operators import DctSubsampledOperator
from .outer import OuterConfig, RunReport, pgm_baseline, run
from .problem import CompositeProblem
from .regularizers import GroupL2Reg, L1Reg
from .studentt import StudentTLoss

INSTANCE_MAGIC = "ipnsolve-instance"
INSTANCE_VERSION = 1

CSV_COLUMNS = ("k", "phi", "g_norm", "d_norm", "alpha", "ls_trials",
               "inner_iters", "cg_total", "cert_residual", "cert_bound",
               "lh_current", "wall_ms")


@dataclass
class InstanceSpec:
    """Deterministic description of one synthetic regression instance.

    ``family`` is ``"l1"`` (sparse signal, ``k = floor(n/40)`` spikes) or
    ``"group"`` (``l`` equal contiguous groups, ``s`` of them nonzero).
    Measurements are ``m = n // 8`` random rows of the orthonormal DCT;
    noise is Student's t with 5 degrees of freedom scaled by 0.1; the
    regularization weight follows ``lambda = 0.1 * ||grad f(0)||_inf``.
    """

    n: int
    family: str = "l1"
    m: Optional[int] = None
    k: Optional[int] = None
    l: Optional[int] = None
    s: Optional[int] = None
    dynamic_range_db: float = 20.0
    nu: float = 0.25
    noise_scale: float = 0.1
    noise_dof: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("l1", "group"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.m is None:
            self.m = self.n // 8
        if self.m > self.n:
            raise ValueError("m must not exceed n")
        if self.family == "l1":
            if self.k is None:
                self.k = self.n // 40
            if self.k > self.n:
                raise ValueError("more nonzeros than coordinates")
        else:
            if self.l is None or self.s is None:
                raise ValueError("group family needs l and s")
            if self.n % self.l != 0:
                raise ValueError("l must divide n")
            if self.s > self.l:
                raise ValueError("more nonzero groups than groups")


def _rng(seed: int) -> np.random.Generator:
    # Counter-based generator keeps instances reproducible across platforms.
    return np.random.Generator(np.random.Philox(seed))


def _magnitudes(rng, count, d_db):
    eta1 = rng.integers(0, 2, size=count) * 2.0 - 1.0
    eta2 = rng.uniform(0.0, 1.0, size=count)
    return eta1 * 10.0 ** (d_db * eta2 / 20.0)


def generate_signal(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    """Reference signal with the configured sparsity pattern and dynamic range."""
    x = np.zeros(spec.n)
    if spec.family == "l1":
        idx = rng.choice(spec.n, size=spec.k, replace=False)
        x[idx] = _magnitudes(rng, spec.k, spec.dynamic_range_db)
    else:
        gsize = spec.n // spec.l
        chosen = rng.choice(spec.l, size=spec.s, replace=False)
        for g in chosen:
            sl = slice(g * gsize, (g + 1) * gsize)
            x[sl] = _magnitudes(rng, gsize, spec.dynamic_range_db)
    return x


def default_groups(n: int, l: int):
    gsize = n // l
    return [np.arange(i * gsize, (i + 1) * gsize) for i in range(l)]


@dataclass
class Instance:
    problem: CompositeProblem
    x_true: np.ndarray
    x0: np.ndarray
    rows: np.ndarray
    lam: float
    spec: InstanceSpec


def generate_instance(spec: InstanceSpec, noise: bool = True) -> Instance:
    """Build the measurement operator, data, regularizer, and starting point."""
    rng = _rng(spec.seed)
    x_true = generate_signal(spec, rng)
    rows = np.sort(rng.choice(spec.n, size=spec.m, replace=False))
    A = DctSubsampledOperator(spec.n, rows)
    b = A.matvec(x_true)
    if noise:
        b = b + spec.noise_scale * rng.standard_t(spec.noise_dof, size=spec.m)
    loss = StudentTLoss(A, b, spec.nu, op_norm_sq=1.0)
    lam = 0.1 * float(np.max(np.abs(loss.gradient(np.zeros(spec.n)))))
    if spec.family == "l1":
        reg = L1Reg(lam)
    else:
        reg = GroupL2Reg(lam, default_groups(spec.n, spec.l))
    problem = CompositeProblem(loss, reg, spec.n, lipschitz_grad=2.0 / spec.nu)
    x0 = A.rmatvec(b)
    return Instance(problem, x_true, x0, rows, lam, spec)


# ---------------------------------------------------------------------------
# instance file format: text header, then two little-endian float64 arrays
# ---------------------------------------------------------------------------

def write_instance(path, inst: Instance) -> None:
    spec = inst.spec
    lines = [f"{INSTANCE_MAGIC} v{INSTANCE_VERSION}"]
    for key in ("family", "n", "m", "k", "l", "s", "dynamic_range_db", "nu",
                "noise_scale", "noise_dof", "seed"):
        val = getattr(spec, key)
        if val is not None:
            lines.append(f"{key}={val}")
    lines.append(f"lambda={inst.lam!r}")
    lines.append("J=" + ",".join(str(i) for i in inst.rows))
    lines.append("end-header")
    header = ("\n".join(lines) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inst.x_true.astype("<f8").tobytes())
        fh.write(inst.problem.smooth.b.astype("<f8").tobytes())


def read_instance(path) -> Instance:
    with open(path, "rb") as fh:
        data = fh.read()
    head_end = data.index(b"end-header\n") + len(b"end-header\n")
    lines = data[:head_end].decode("ascii").splitlines()
    if not lines[0].startswith(INSTANCE_MAGIC):
        raise ValueError("not an instance file")
    fields = dict(line.split("=", 1) for line in lines[1:-1])
    ints = {k: int(fields[k]) for k in ("n", "m", "seed") if k in fields}
    opt_ints = {k: int(fields[k]) for k in ("k", "l", "s") if k in fields}
    spec = InstanceSpec(n=ints["n"], family=fields["family"], m=ints["m"],
                        dynamic_range_db=float(fields["dynamic_range_db"]),
                        nu=float(fields["nu"]),
                        noise_scale=float(fields["noise_scale"]),
                        noise_dof=float(fields["noise_dof"]),
                        seed=ints["seed"], **opt_ints)
    lam = float(fields["lambda"])
    rows = np.array([int(t) for t in fields["J"].split(",")], dtype=np.int64)
    body = data[head_end:]
    x_true = np.frombuffer(body[:8 * spec.n], dtype="<f8").copy()
    b = np.frombuffer(body[8 * spec.n:8 * (spec.n + spec.m)], dtype="<f8").copy()
    A = DctSubsampledOperator(spec.n, rows)
    loss = StudentTLoss(A, b, spec.nu, op_norm_sq=1.0)
    if spec.family == "l1":
        reg = L1Reg(lam)
    else:
        reg = GroupL2Reg(lam, default_groups(spec.n, spec.l))
    problem = CompositeProblem(loss, reg, spec.n, lipschitz_grad=2.0 / spec.nu)
    return Instance(problem, x_true, A.rmatvec(b), rows, lam, spec)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    instance: InstanceSpec
    solver: OuterConfig = field(default_factory=OuterConfig)
    algorithm: str = "alg1"  # alg1 | alg2 | alg3 | pgm
    inner: Optional[str] = None
    trials: int = 1
    out_dir: Optional[Path] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


def solve_instance(inst: Instance, cfg: OuterConfig, algorithm: str = "alg1",
                   inner: Optional[str] = None) -> RunReport:
    if algorithm == "pgm":
        return pgm_baseline(inst.problem, inst.x0,
                            step=1.0 / inst.problem.lipschitz_grad,
                            eps0=cfg.eps0,
                            max_wall_seconds=cfg.max_wall_seconds)
    solver_cfg = cfg
    if algorithm == "alg2" and cfg.lh_known is None:
        solver_cfg = replace(cfg, lh_known=inst.problem.lipschitz_grad)
    elif algorithm == "alg3" and cfg.lh_adaptive_u0 is None:
        solver_cfg = replace(cfg, lh_adaptive_u0=inst.problem.lipschitz_grad)
    elif algorithm == "alg1":
        solver_cfg = replace(cfg, lh_known=None, lh_adaptive_u0=None)
    return run(inst.problem, inst.x0, solver_cfg, inner=inner)


def write_trace_csv(path, report: RunReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in report.records:
            writer.writerow([r.k, repr(r.phi), repr(r.g_norm), repr(r.d_norm),
                             repr(r.alpha), r.ls_trials, r.inner_iters,
                             r.cg_total, repr(r.cert_residual),
                             repr(r.cert_bound), repr(r.lh_current),
                             round(r.wall_ms, 3)])


@dataclass
class ExperimentSummary:
    trials: int
    mean_fv: float
    mean_g_norm: float
    mean_time_s: float
    mean_iters: float
    audit_violations: dict[str, int]
    statuses: list[str]

    def lines(self):
        out = [f"trials {self.trials}",
               f"fv {self.mean_fv:.6g}",
               f"g_norm {self.mean_g_norm:.6g}",
               f"time_s {self.mean_time_s:.4g}",
               f"iters {self.mean_iters:.4g}",
               "statuses " + ",".join(self.statuses)]
        for key, count in sorted(self.audit_violations.items()):
            out.append(f"audit_{key} {count}")
        return out


def summarize(reports: list[RunReport]) -> ExperimentSummary:
    viol: dict[str, int] = {}
    for rep in reports:
        for key, count in rep.audit_violations.items():
            viol[key] = viol.get(key, 0) + count
    return ExperimentSummary(
        trials=len(reports),
        mean_fv=float(np.mean([r.final_phi for r in reports])),
        mean_g_norm=float(np.mean([r.final_g_norm for r in reports])),
        mean_time_s=float(np.mean([r.wall_s for r in reports])),
        mean_iters=float(np.mean([r.iterations for r in reports])),
        audit_violations=viol,
        statuses=[r.status for r in reports])


def run_experiment(cfg: ExperimentConfig) -> tuple[ExperimentSummary, list[RunReport]]:
    """Run ``trials`` independent seeds and aggregate the Table-style summary.

    Per-trial traces land in ``out_dir`` as ``trial###.csv`` when configured;
    the summary is written as ``summary.txt``.
    """
    reports = []
    for trial in range(cfg.trials):
        spec = replace(cfg.instance, seed=cfg.instance.seed + trial)
        inst = generate_instance(spec)
        report = solve_instance(inst, cfg.solver, cfg.algorithm, cfg.inner)
        reports.append(report)
        if cfg.out_dir is not None:
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_trace_csv(out / f"trial{trial:03d}.csv", report)
    summary = summarize(reports)
    if cfg.out_dir is not None:
        (Path(cfg.out_dir) / "summary.txt").write_text(
            "\n".join(summary.lines()) + "\n")
    return summary, reports


def delta_sweep(cfg: ExperimentConfig, deltas) -> list[dict]:
    """Average time / iterations / objective per ``delta`` value."""
    rows = []
    for delta in deltas:
        if not 0.0 <= delta <= 1.0:
            raise ValueError("delta values must lie in [0, 1]")
        sweep_cfg = replace(cfg, solver=replace(cfg.solver, delta=delta),
                            out_dir=None)
        summary, _ = run_experiment(sweep_cfg)
        rows.append({"delta": delta, "mean_time_s": summary.mean_time_s,
                     "mean_iters": summary.mean_iters,
                     "mean_fv": summary.mean_fv})
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "delta_sweep.csv", "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["delta", "mean_time_s", "mean_iters", "mean_fv"])
            writer.writeheader()
            writer.writerows(rows)
    return rows


def default_delta_grid(step: float = 0.05):
    count = int(round(1.0 / step)) + 1
    return [round(i * step, 10) for i in range(count)]

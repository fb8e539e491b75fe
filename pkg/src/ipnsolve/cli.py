"""Command-line harness: batch solves, experiments, sweeps, instance files."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (ExperimentConfig, InstanceSpec, default_delta_grid,
                      delta_sweep, generate_instance, read_instance,
                      run_experiment, solve_instance, write_instance,
                      write_trace_csv)
from .operators import DenseOperator
from .outer import OuterConfig, regularized_newton
from .problem import CompositeProblem, kkt_residual, objective
from .regularizers import ZeroReg
from .studentt import StudentTLoss

ALGORITHMS = ("alg1", "alg2", "alg3", "pgm", "regnewton")


def _add_instance_flags(p):
    p.add_argument("--n", type=int, default=4096, help="signal length")
    p.add_argument("--dB", type=float, default=20.0, dest="d_db",
                   help="dynamic range of the reference signal")
    p.add_argument("--nu", type=float, default=None,
                   help="Student's t scale (default 0.25 for l1, 0.2 for group)")
    p.add_argument("--family", choices=("l1", "group"), default="l1")
    p.add_argument("--groups", type=int, default=64,
                   help="number of groups (group family)")
    p.add_argument("--nonzero-groups", type=int, default=8,
                   help="nonzero groups in the reference signal (group family)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instance", type=Path, default=None,
                   help="read the instance from a file instead of generating it")


def _add_solver_flags(p):
    p.add_argument("--c", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=None,
                   help="residual exponent in the ridge (default 0.95 l1 / 0 group)")
    p.add_argument("--mu1", type=float, default=0.1)
    p.add_argument("--mu2", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=0.6)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--eps0", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--max-seconds", type=float, default=1800.0)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="alg1")
    p.add_argument("--inner", choices=("ssn", "pg"), default=None)
    p.add_argument("--lh", type=float, default=None,
                   help="known gradient Lipschitz constant (alg2)")
    p.add_argument("--lh-u0", type=float, default=None,
                   help="initial Lipschitz estimate (alg3)")


def _spec_from(args) -> InstanceSpec:
    nu = args.nu if args.nu is not None else (0.25 if args.family == "l1" else 0.2)
    kwargs = dict(n=args.n, family=args.family, dynamic_range_db=args.d_db,
                  nu=nu, seed=args.seed)
    if args.family == "group":
        kwargs.update(l=args.groups, s=args.nonzero_groups)
    return InstanceSpec(**kwargs)


def _solver_from(args) -> OuterConfig:
    delta = args.delta
    if delta is None:
        delta = 0.95 if getattr(args, "family", "l1") == "l1" else 0.0
    return OuterConfig(c=args.c, tau=args.tau, mu1=args.mu1, mu2=args.mu2,
                       delta=delta, theta=args.theta, eps0=args.eps0,
                       max_outer_iters=args.max_iters,
                       max_wall_seconds=args.max_seconds,
                       lh_known=args.lh, lh_adaptive_u0=args.lh_u0)


def _load_instance(args):
    if args.instance is not None:
        return read_instance(args.instance)
    return generate_instance(_spec_from(args))


def _cmd_solve(args) -> int:
    inst = _load_instance(args)
    cfg = _solver_from(args)
    if args.algorithm == "regnewton":
        report = _run_regnewton(inst, cfg)
    else:
        report = solve_instance(inst, cfg, args.algorithm, args.inner)
    print(f"status     {report.status}")
    print(f"iterations {report.iterations}")
    print(f"fv         {report.final_phi:.8g}")
    print(f"g_norm     {report.final_g_norm:.4g}")
    print(f"time_s     {report.wall_s:.3f}")
    for key, count in sorted(report.audit_violations.items()):
        print(f"audit_{key} {count}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(out / "trace.csv", report)
        from .plots import save_convergence_figure
        save_convergence_figure(out / "convergence.png", report,
                                title=f"{args.algorithm}")
        print(f"wrote {out}/trace.csv and {out}/convergence.png")
    return 0 if report.status == "converged" else 1


def _run_regnewton(inst, cfg):
    # Smooth reduction: drop the regularizer and materialize a dense operator.
    if inst.spec.n > 2048:
        raise SystemExit("regnewton needs n <= 2048 (dense Hessian)")
    dense = np.column_stack([
        inst.problem.smooth.A.matvec(col)
        for col in np.eye(inst.spec.n)])
    loss = StudentTLoss(DenseOperator(dense), inst.problem.smooth.b,
                        inst.spec.nu, op_norm_sq=1.0)
    problem = CompositeProblem(loss, ZeroReg(), inst.spec.n,
                               lipschitz_grad=inst.problem.lipschitz_grad)
    return regularized_newton(problem, inst.x0, cfg)


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig(instance=_spec_from(args), solver=_solver_from(args),
                           algorithm=args.algorithm, inner=args.inner,
                           trials=args.trials,
                           out_dir=Path(args.out) if args.out else None)
    summary, reports = run_experiment(cfg)
    for line in summary.lines():
        print(line)
    if args.out is not None:
        from .plots import save_convergence_figure
        save_convergence_figure(Path(args.out) / "convergence.png", reports[0],
                                title=f"{args.algorithm}, trial 0")
    return 0 if all(s == "converged" for s in summary.statuses) else 1


def _cmd_sweep_delta(args) -> int:
    deltas = ([float(t) for t in args.deltas.split(",")]
              if args.deltas else default_delta_grid(args.step))
    cfg = ExperimentConfig(instance=_spec_from(args), solver=_solver_from(args),
                           algorithm=args.algorithm, inner=args.inner,
                           trials=args.trials,
                           out_dir=Path(args.out) if args.out else None)
    rows = delta_sweep(cfg, deltas)
    print("delta,mean_time_s,mean_iters,mean_fv")
    for r in rows:
        print(f"{r['delta']},{r['mean_time_s']:.4g},{r['mean_iters']:.4g},"
              f"{r['mean_fv']:.8g}")
    if args.out is not None:
        from .plots import save_delta_sweep_figure
        save_delta_sweep_figure(Path(args.out) / "delta_sweep.png", rows)
    return 0


def _cmd_gen_instance(args) -> int:
    inst = generate_instance(_spec_from(args))
    write_instance(args.out, inst)
    print(f"wrote {args.out} (n={inst.spec.n}, m={inst.spec.m}, "
          f"lambda={inst.lam:.6g})")
    return 0


def _cmd_check(args) -> int:
    """Small-instance audit: oracle consistency plus one fully audited run."""
    failures = 0

    def report(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    spec = InstanceSpec(n=512, seed=args.seed, dynamic_range_db=20.0, nu=0.25)
    inst = generate_instance(spec)
    rng = np.random.Generator(np.random.Philox(args.seed))

    # adjoint consistency of the measurement operator
    ok = True
    A = inst.problem.smooth.A
    for _ in range(50):
        u = rng.standard_normal(spec.n)
        v = rng.standard_normal(spec.m)
        if abs(A.matvec(u) @ v - u @ A.rmatvec(v)) > 1e-10 * (1 + np.linalg.norm(u)):
            ok = False
    report("operator adjoint identity", ok)

    # gradient vs central finite differences
    ok = True
    x = rng.standard_normal(spec.n) * 0.1
    g = inst.problem.smooth.gradient(x)
    for _ in range(10):
        h = rng.standard_normal(spec.n)
        h /= np.linalg.norm(h)
        t = 1e-6
        fd = (inst.problem.smooth.value(x + t * h)
              - inst.problem.smooth.value(x - t * h)) / (2 * t)
        if abs(fd - g @ h) > 1e-5 * (1 + abs(fd)):
            ok = False
    report("gradient finite-difference consistency", ok)

    # prox nonexpansiveness
    ok = True
    for _ in range(200):
        u, v = rng.standard_normal(spec.n), rng.standard_normal(spec.n)
        t = float(rng.uniform(0.1, 5.0))
        pu = inst.problem.reg.prox(u, t)
        pv = inst.problem.reg.prox(v, t)
        if np.linalg.norm(pu - pv) > np.linalg.norm(u - v) * (1 + 1e-12):
            ok = False
    report("prox nonexpansiveness", ok)

    cfg = OuterConfig(eps0=1e-5, max_outer_iters=200)
    rep = solve_instance(inst, cfg, "alg1")
    report("audited solve converged", rep.status == "converged")
    report("zero audit violations", rep.clean)
    fv = objective(inst.problem, rep.final_x)
    gn = np.linalg.norm(kkt_residual(inst.problem, rep.final_x))
    report("reported objective matches recomputation",
           abs(fv - rep.final_phi) <= 1e-6 * (1 + abs(fv)))
    report("reported residual matches recomputation",
           abs(gn - rep.final_g_norm) <= 1e-8 * (1 + gn))
    print(f"{'OK' if failures == 0 else 'FAILED'}: {failures} failing check(s)")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipnsolve",
        description="Inexact proximal Newton solver for sparse Student's "
                    "t-regression, with per-iteration inequality audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solve and write its trace")
    _add_instance_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", type=Path, default=None,
                   help="directory for trace.csv and convergence.png")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("experiment", help="multi-trial averages (table format)")
    _add_instance_flags(p)
    _add_solver_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("sweep-delta", help="sweep the ridge exponent delta")
    _add_instance_flags(p)
    _add_solver_flags(p)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--deltas", type=str, default=None,
                   help="comma-separated list (default: 0 to 1 by --step)")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_sweep_delta)

    p = sub.add_parser("gen-instance", help="write an instance file")
    _add_instance_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_gen_instance)

    p = sub.add_parser("check", help="run the quick audit/property suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

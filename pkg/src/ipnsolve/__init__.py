"""Inexact proximal Newton solver for nonconvex composite minimization.

Library layout:

- :mod:`ipnsolve.problem` -- composite-problem abstraction and KKT residual
- :mod:`ipnsolve.regularizers` -- l1, group-l2, and zero regularizers
- :mod:`ipnsolve.operators` -- dense and subsampled-DCT linear operators
- :mod:`ipnsolve.studentt` -- the Student's t data-fit oracle
- :mod:`ipnsolve.ssn` -- semismooth Newton dual subproblem solver
- :mod:`ipnsolve.pginner` -- proximal-gradient subproblem solver
- :mod:`ipnsolve.outer` -- outer loops, baselines, and runtime audits
- :mod:`ipnsolve.harness` -- instance generation and experiment drivers
"""

from .harness import (ExperimentConfig, Instance, InstanceSpec,
                      generate_instance, run_experiment, solve_instance)
from .operators import DctSubsampledOperator, DenseOperator, LinearOperator
from .outer import (OuterConfig, OuterFailure, RunReport, pgm_baseline,
                    regularized_newton, run)
from .pginner import PgInnerConfig, pg_inner_solve
from .problem import (CompositeProblem, HessianInfo, OracleError, ProxOracle,
                      SmoothOracle, kkt_residual, objective)
from .regularizers import GroupL2Reg, L1Reg, ZeroReg
from .ssn import (InnerSolveError, SsnConfig, SsnSubproblem,
                  SubproblemCertificate, ssn_solve)
from .studentt import StudentTLoss, psi_derivatives

__all__ = [
    "CompositeProblem", "DctSubsampledOperator", "DenseOperator",
    "ExperimentConfig", "GroupL2Reg", "HessianInfo", "InnerSolveError",
    "Instance", "InstanceSpec", "L1Reg", "LinearOperator", "OracleError",
    "OuterConfig", "OuterFailure", "PgInnerConfig", "ProxOracle", "RunReport",
    "SmoothOracle", "SsnConfig", "SsnSubproblem", "StudentTLoss",
    "SubproblemCertificate", "ZeroReg", "generate_instance", "kkt_residual",
    "objective", "pg_inner_solve", "pgm_baseline", "regularized_newton",
    "run", "run_experiment", "solve_instance", "ssn_solve", "psi_derivatives",
]

__version__ = "0.1.0"

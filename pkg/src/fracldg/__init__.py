"""LDG solver for 1D space-time fractional nonlinear convection-diffusion.

Modules: :mod:`.basis` (Legendre modal basis, projections),
:mod:`.fractional` (L1 / distributed-order kernels, closed-form fractional
operators), :mod:`.riesz` (Galerkin matrix of the Riesz potential),
:mod:`.ldg` (spatial operators), :mod:`.march` (time stepping),
:mod:`.mms` (manufactured solutions and convergence studies) and
:mod:`.cli`.
"""

from .basis import GridFunction, Mesh1D, gauss_radau_project, l2_error, l2_norm, l2_project
from .fractional import DistributedRule, TimeGrid, distributed_rule, single_order_rule
from .ldg import FluxSpec, LDGDiscretization, PDEProblem
from .march import NonconvergenceError, Solver, SolverConfig, run, stability_run
from .mms import ConvergenceTable, StudySettings, case_library, convergence_study, derive_source
from .riesz import RieszOperator, assemble_riesz_matrix

__all__ = [
    "ConvergenceTable", "DistributedRule", "FluxSpec", "GridFunction", "LDGDiscretization",
    "Mesh1D", "NonconvergenceError", "PDEProblem", "RieszOperator", "Solver", "SolverConfig",
    "StudySettings", "TimeGrid", "assemble_riesz_matrix", "case_library", "convergence_study",
    "derive_source", "distributed_rule", "gauss_radau_project", "l2_error", "l2_norm",
    "l2_project", "run", "single_order_rule", "stability_run",
]

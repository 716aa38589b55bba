"""Quasinonlocal coupling of nonlocal and local diffusion in one dimension."""
from .assembly import (
    Arrangement,
    ArrangementKind,
    CouplingConfig,
    Mesh,
    OperatorMatrix,
    Regime,
    Scheme,
    apply,
    assemble,
    assemble_direct,
    bilinear,
    classify,
    discrete_energy,
)
from .config import RunConfig
from .errors import ConfigurationError, DivergentMomentError, SingularSystemError
from .experiments import (
    ConvergenceReport,
    Forcing,
    Problem,
    compare_direct_vs_compatible,
    convergence_study,
    patch_test,
    solve_problem,
)
from .kernels import (
    Kernel,
    KernelKind,
    constant_kernel,
    custom_kernel,
    inverse_abs_kernel,
    make_kernel,
    moment,
    second_moment_total,
    validate_kernel,
)
from .linalg import BandedSystem, solve
from .report import Check, Report
from .weights import WeightEvaluator

__all__ = [
    "ConfigurationError",
    "DivergentMomentError",
    "SingularSystemError",
    "Arrangement",
    "ArrangementKind",
    "BandedSystem",
    "Check",
    "ConvergenceReport",
    "CouplingConfig",
    "Forcing",
    "Kernel",
    "KernelKind",
    "Mesh",
    "OperatorMatrix",
    "Problem",
    "Regime",
    "Report",
    "RunConfig",
    "Scheme",
    "WeightEvaluator",
    "apply",
    "assemble",
    "assemble_direct",
    "bilinear",
    "classify",
    "compare_direct_vs_compatible",
    "constant_kernel",
    "convergence_study",
    "custom_kernel",
    "discrete_energy",
    "inverse_abs_kernel",
    "make_kernel",
    "moment",
    "patch_test",
    "second_moment_total",
    "solve",
    "solve_problem",
    "validate_kernel",
]
__version__ = "0.1.0"

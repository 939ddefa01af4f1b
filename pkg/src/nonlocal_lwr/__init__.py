"""Finite-volume laboratory for a non-local LWR traffic model whose speed
limit jumps at x=0: solvers, a vanishing-viscosity companion, and numerical
audits of the admissibility conditions the model is expected to satisfy.
"""

from .backend import BACKEND
from .core import (
    BumpProfile,
    CustomProfile,
    DensityField,
    Grid,
    Kernel,
    RiemannProfile,
    Scenario,
    VelocityField,
    build_grid,
    make_kernel,
    sample_initial,
)
from .convolution import (
    ConvField,
    ConvWeights,
    DerivWeights,
    compute_prime_weights,
    compute_weights,
    conv_x_derivative,
    convolve,
)
from .solver import (
    SolverState,
    Trajectory,
    cfl_dt,
    riemann_local_exact,
    run,
    step_local_godunov,
    step_nonlocal,
)
from .viscous import (
    MollifiedVelocity,
    ViscousState,
    mollify_initial,
    run_viscous,
    vanishing_viscosity_study,
    viscous_step,
)
from .analysis import (
    DiagnosticsTable,
    EntropyReport,
    StabilityReport,
    TraceReport,
    convergence_order,
    diagnostics,
    entropy_residuals,
    extract_traces,
    stability_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BumpProfile",
    "ConvField",
    "ConvWeights",
    "CustomProfile",
    "DensityField",
    "DerivWeights",
    "DiagnosticsTable",
    "EntropyReport",
    "Grid",
    "Kernel",
    "MollifiedVelocity",
    "RiemannProfile",
    "Scenario",
    "SolverState",
    "StabilityReport",
    "TraceReport",
    "Trajectory",
    "VelocityField",
    "ViscousState",
    "build_grid",
    "cfl_dt",
    "compute_prime_weights",
    "compute_weights",
    "conv_x_derivative",
    "convergence_order",
    "convolve",
    "diagnostics",
    "entropy_residuals",
    "extract_traces",
    "make_kernel",
    "mollify_initial",
    "riemann_local_exact",
    "run",
    "run_viscous",
    "sample_initial",
    "stability_experiment",
    "step_local_godunov",
    "step_nonlocal",
    "vanishing_viscosity_study",
    "viscous_step",
]

"""Gradient flow of the Ambrosio-Tortorelli functional on 2-D rectangles.

Two backends evolve the coupled (u, z) system with homogeneous Neumann
boundary conditions: a spectral Galerkin method in the cosine eigenbasis of
the Neumann Laplacian, and a semi-implicit finite-difference scheme for
image-sized grids.  Diagnostics track the quantities the underlying theory
controls: energy decay, the maximum principle for z, and resolution-uniform
norm bounds.
"""

from .diagnostics import (
    BoundLedger,
    DiagnosticsRow,
    GNParams,
    bound_ledger,
    energy_identity_residual,
    gn_ratio,
    make_row,
    max_principle_norms,
    row_is_finite,
)
from .energy import ATParams, at_energy, phi, phi_prime, variational_gradient
from .fields import (
    Grid,
    NormLadder,
    ScalarField2D,
    gradient,
    grad_lp_norm,
    integrate,
    inner,
    l2_norm,
    laplacian_neumann,
    lp_norm,
    norm_ladder,
)
from .flow import (
    DivergedError,
    FlowState,
    SolverError,
    TrajectoryRecord,
    run_flow,
    step_semi_implicit,
)
from .galerkin import (
    CoeffVector,
    SpectralBasis,
    build_basis,
    galerkin_rhs,
    integrate_galerkin,
    project,
    reconstruct,
    stable_dt,
)

__version__ = "0.1.0"

__all__ = [
    "ATParams",
    "BoundLedger",
    "CoeffVector",
    "DiagnosticsRow",
    "DivergedError",
    "FlowState",
    "GNParams",
    "Grid",
    "NormLadder",
    "ScalarField2D",
    "SolverError",
    "SpectralBasis",
    "TrajectoryRecord",
    "at_energy",
    "bound_ledger",
    "build_basis",
    "energy_identity_residual",
    "galerkin_rhs",
    "gn_ratio",
    "grad_lp_norm",
    "gradient",
    "inner",
    "integrate",
    "integrate_galerkin",
    "l2_norm",
    "laplacian_neumann",
    "lp_norm",
    "make_row",
    "max_principle_norms",
    "row_is_finite",
    "norm_ladder",
    "phi",
    "phi_prime",
    "project",
    "reconstruct",
    "run_flow",
    "stable_dt",
    "step_semi_implicit",
    "variational_gradient",
]

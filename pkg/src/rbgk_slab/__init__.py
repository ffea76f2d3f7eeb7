"""Stationary relativistic BGK solver for gas mixtures in a slab."""

from .grids import (
    MomentumGrid,
    SpatialGrid,
    build_momentum_grid,
    build_spatial_grid,
    integrate_momentum,
)
from .moments import SpeciesParams, bessel_k_ratio, phi, phi_inverse
from .attractor import AuxiliaryProfile, AuxiliaryState, compute_aux_profile, solve_beta
from .solver import (
    BoundaryData,
    IterationReport,
    NotConverged,
    apply_solution_operator,
    l1_distance,
    omega_threshold_scan,
    picard_solve,
    propagate_boundary,
)
from .diagnostics import CertificateReport, DerivedConstants, certify, derived_constants

__all__ = [
    "AuxiliaryProfile",
    "AuxiliaryState",
    "BoundaryData",
    "CertificateReport",
    "DerivedConstants",
    "IterationReport",
    "MomentumGrid",
    "NotConverged",
    "SpatialGrid",
    "SpeciesParams",
    "apply_solution_operator",
    "bessel_k_ratio",
    "build_momentum_grid",
    "build_spatial_grid",
    "certify",
    "compute_aux_profile",
    "derived_constants",
    "integrate_momentum",
    "l1_distance",
    "omega_threshold_scan",
    "phi",
    "phi_inverse",
    "picard_solve",
    "propagate_boundary",
    "solve_beta",
]

__version__ = "0.1.0"

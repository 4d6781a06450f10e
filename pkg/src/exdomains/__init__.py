"""Numerical construction of exceptional domains bifurcating from cylinders.

The package evaluates the boundary operator ``H(phi)`` of axisymmetric,
periodic perturbations ``{|z| = phi(t)}`` of a straight cylinder, the
dispersion relation ``V`` of its linearization at constant radii, and traces
the branches of nonconstant solutions of ``H(phi) + 2 pi = 0`` that
bifurcate at the radii ``lambda* / k``.
"""
from .dispersion import (
    CriticalRadius,
    DispersionPoint,
    dispersion_components,
    dispersion_point,
    dispersion_V,
    dispersion_V_prime,
    dispersion_V_quadrature,
    eigenvalue,
    find_lambda_star,
)
from .kernels import KernelEvalConfig, kernel_F, kernel_G, kernel_G0, kernel_G1, kernel_g, kernel_mass
from .linearized import LinearizedApplyConfig, apply_L, eigen_check_fd, spectral_solve
from .operator_eval import QuadratureSpec, equilibrium_residual, h_direct, h_regularized
from .profile import PeriodicProfile, ProfileError
from .solver import (
    BranchPoint,
    BranchResult,
    SolverConfig,
    newton_solve,
    residual_galerkin,
    trace_branch,
    verify_branch_point,
)
from .special_functions import BesselAccuracy, bessel_i, bessel_k

__version__ = "0.1.0"

__all__ = [
    "BesselAccuracy", "BranchPoint", "BranchResult", "CriticalRadius", "DispersionPoint",
    "KernelEvalConfig", "LinearizedApplyConfig", "PeriodicProfile", "ProfileError",
    "QuadratureSpec", "SolverConfig", "apply_L", "bessel_i", "bessel_k",
    "dispersion_V", "dispersion_V_prime", "dispersion_V_quadrature", "dispersion_components",
    "dispersion_point", "eigen_check_fd", "eigenvalue", "equilibrium_residual",
    "find_lambda_star", "h_direct", "h_regularized", "kernel_F", "kernel_G", "kernel_G0",
    "kernel_G1", "kernel_g", "kernel_mass", "newton_solve", "residual_galerkin",
    "spectral_solve", "trace_branch", "verify_branch_point",
]

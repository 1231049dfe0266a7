"""Curvature-dimension calculus for long-range jump operators on the
integer lattice: kernels, nonlocal operators, optimal CD-functions,
relaxation functions, Li-Yau and Harnack estimates, and heat-kernel bounds."""

from .kernels import (
    DivergentSeriesError,
    Kernel,
    KernelSpecError,
    ToleranceError,
    kernel_aggregate,
    kernel_conditions,
    make_kernel,
    truncate,
)
from .scalars import h_eval, h_pair, h_prime, h_prime_inv, nu_certificate, nu_constant, upsilon
from .operators import (
    LatticeFunction,
    apply_L,
    basic_lower_bound,
    normalize_at,
    psi2_upsilon,
    psi_upsilon,
    symmetrize,
)
from .cdfuncs import (
    extremal_profile,
    finite_support_cd,
    lagrange_G,
    make_cd,
    power_cd,
    power_exponent,
    relaxation,
    rho_eval,
    rho_inverse,
)
from .heat import build_generator, heat_kernel, solve_heat
from .harnack import harnack_rhs, harnack_sum, heat_bounds, optimize_path, step_regime
from .verify import cd_adversarial, certify_d, liyau_report

__version__ = "0.1.0"

__all__ = [
    "Kernel",
    "KernelSpecError",
    "DivergentSeriesError",
    "ToleranceError",
    "make_kernel",
    "truncate",
    "kernel_aggregate",
    "kernel_conditions",
    "upsilon",
    "h_pair",
    "h_eval",
    "h_prime",
    "h_prime_inv",
    "nu_constant",
    "nu_certificate",
    "LatticeFunction",
    "normalize_at",
    "symmetrize",
    "apply_L",
    "psi_upsilon",
    "psi2_upsilon",
    "basic_lower_bound",
    "make_cd",
    "finite_support_cd",
    "lagrange_G",
    "rho_eval",
    "rho_inverse",
    "extremal_profile",
    "power_exponent",
    "power_cd",
    "relaxation",
    "build_generator",
    "solve_heat",
    "heat_kernel",
    "harnack_sum",
    "optimize_path",
    "step_regime",
    "harnack_rhs",
    "heat_bounds",
    "cd_adversarial",
    "certify_d",
    "liyau_report",
]

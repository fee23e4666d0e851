from .gamma import gamma, log_gamma
from .wienerhopf import (
    FactorizationData,
    FMethod,
    T_closed_form,
    WHParams,
    WHSolution,
    alpha,
    alpha_plus,
    closed_form_integrals,
    compare_methods,
    convergence_study,
    driver,
    driver_hat,
    f_second_derivative,
    factorization_data,
    factorization_residual,
    jump_residual,
    kernel_hat,
    kernel_mass_check,
    kernel_samples,
    nystrom_weights,
    solve_neumann,
    t_zeta,
)

__all__ = [
    "gamma",
    "log_gamma",
    "WHParams",
    "WHSolution",
    "FactorizationData",
    "FMethod",
    "kernel_hat",
    "kernel_samples",
    "kernel_mass_check",
    "driver",
    "driver_hat",
    "t_zeta",
    "alpha",
    "alpha_plus",
    "factorization_data",
    "factorization_residual",
    "jump_residual",
    "nystrom_weights",
    "solve_neumann",
    "closed_form_integrals",
    "T_closed_form",
    "f_second_derivative",
    "compare_methods",
    "convergence_study",
]

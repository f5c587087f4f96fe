"""RKHS ANOVA meta-modeling with ridge group sparse estimation.

Thin re-export of the compiled core. Group index lists are 1-based to match
the x1..xd column labels used by the CLI artifacts.
"""

from ._core import (
    Model,
    __version__,
    abs_first_moment,
    concentration_probe,
    covering_number,
    critical_radius,
    enumerate_groups,
    eps_square_variance,
    fit,
    fourth_moment,
    hazard_threshold,
    noise_cdf,
    noise_density,
    noise_variance,
    normalizing_constant,
    q_function,
    rng_algorithm,
    sample_errors,
    sudakov_probe,
    tail_log_derivative,
    tune,
)

__all__ = [
    "Model",
    "__version__",
    "abs_first_moment",
    "concentration_probe",
    "covering_number",
    "critical_radius",
    "enumerate_groups",
    "eps_square_variance",
    "fit",
    "fourth_moment",
    "hazard_threshold",
    "noise_cdf",
    "noise_density",
    "noise_variance",
    "normalizing_constant",
    "q_function",
    "rng_algorithm",
    "sample_errors",
    "sudakov_probe",
    "tail_log_derivative",
    "tune",
]

"""Event-driven simulation of mean-field spiking systems and nonparametric
estimation of the spiking-rate function.

The compiled core exposes the main operations; see the project README for the
JSON configuration schema shared with the command line tool.
"""

from ._core import (
    KernelSpec,
    ModelSpec,
    Trajectory,
    build_kernel,
    clt_variance,
    detect_extinction,
    estimate_rate,
    evaluate_big_f,
    extinction_lower_bound,
    find_equilibria,
    model_from_json,
    occupation_integral,
    simulate,
    solve_limit_ode,
)

__version__ = "0.1.0"

__all__ = [
    "KernelSpec",
    "ModelSpec",
    "Trajectory",
    "build_kernel",
    "clt_variance",
    "detect_extinction",
    "estimate_rate",
    "evaluate_big_f",
    "extinction_lower_bound",
    "find_equilibria",
    "model_from_json",
    "occupation_integral",
    "simulate",
    "solve_limit_ode",
    "__version__",
]

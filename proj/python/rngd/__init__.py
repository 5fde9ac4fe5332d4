"""Riemannian natural gradient descent on Grassmann manifolds.

Thin wrapper over the compiled ``_rngd`` module. Matrices are numpy arrays;
a Grassmann point is any n x p array with orthonormal columns.
"""

from ._rngd import (
    ContractViolation,
    DataError,
    DimensionError,
    NumericalError,
    __version__,
    compare,
    config_keys,
    decide,
    exp_map,
    project,
    random_point,
    retract,
    rsgd_step_size,
    run_experiment,
    solve_damped,
    subspace_dist,
    verify,
)

__all__ = [
    "ContractViolation",
    "DataError",
    "DimensionError",
    "NumericalError",
    "__version__",
    "compare",
    "config_keys",
    "decide",
    "exp_map",
    "project",
    "random_point",
    "retract",
    "rsgd_step_size",
    "run_experiment",
    "solve_damped",
    "subspace_dist",
    "verify",
]

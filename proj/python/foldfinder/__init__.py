"""Fold (saddle-node) points of concave-convex Dirichlet systems.

Thin wrapper over the compiled ``_core`` extension.
"""

from ._core import (
    ConvergenceError,
    DomainError,
    Error,
    FiberEmpty,
    Grid,
    InvalidArgument,
    Model,
    NoFold,
    Problem,
    abc_model,
    coupled_model,
    interval,
    principal_laplacian_eigenvalue,
    rectangle,
    run_cli,
    sublinear_model,
    terms_model,
    validate_hypotheses,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "Error",
    "FiberEmpty",
    "Grid",
    "InvalidArgument",
    "Model",
    "NoFold",
    "Problem",
    "abc_model",
    "coupled_model",
    "interval",
    "principal_laplacian_eigenvalue",
    "rectangle",
    "run_cli",
    "sublinear_model",
    "terms_model",
    "validate_hypotheses",
]

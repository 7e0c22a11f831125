"""Pseudo-spectral verification toolkit for the periodic incompressible
Navier-Stokes equations: closed-form solution families, PDE residual and
integral-identity checks, blowup diagnostics, a small DNS solver, and
functional-inequality reports."""

__version__ = "0.1.0"

from .grid import (
    ScalarField,
    SpectralGrid,
    VectorField,
    derivative,
    leray_project,
    make_grid,
    norm,
    solve_poisson,
    to_physical,
    to_spectral,
)
from .families import (
    ClosedFormField,
    LatticeFlowParams,
    LogisticParams,
    SixthRootFamily,
    SixthRootParams,
    SymbolicField,
    lattice_velocity,
    logistic_blowup_time,
    logistic_value,
    separable_product,
    sixth_root_value,
    taylor_green,
)
from .residuals import FieldBundle, FlowParams, ResidualReport, momentum_residual

__all__ = [
    "__version__",
    "SpectralGrid",
    "ScalarField",
    "VectorField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "derivative",
    "solve_poisson",
    "leray_project",
    "norm",
    "ClosedFormField",
    "SymbolicField",
    "SixthRootParams",
    "SixthRootFamily",
    "sixth_root_value",
    "LogisticParams",
    "logistic_value",
    "logistic_blowup_time",
    "LatticeFlowParams",
    "lattice_velocity",
    "separable_product",
    "taylor_green",
    "FlowParams",
    "FieldBundle",
    "ResidualReport",
    "momentum_residual",
]

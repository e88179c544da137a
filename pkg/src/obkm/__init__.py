"""Pseudo-spectral laboratory for the creeping-flow Oldroyd-B stress equation.

Modules
-------
grid          periodic grids, field containers, transforms and derivatives
norms         Sobolev, Lebesgue and sup norms; the mollifier
stokes        spectral and free-space velocity from stress
evolution     the stress right-hand side and RK4 time stepping
monitor       blow-up diagnostics, a priori bounds and run classification
inequalities  randomised measurement of functional inequalities
runner, cli   configuration, checkpoints and the ``obkm`` command
"""

from .evolution import (
    PhysicalParams,
    Status,
    TimeStepperConfig,
    integrate,
    make_rhs,
    rhs_F,
    rhs_F_mollified,
    step_rk4,
)
from .grid import (
    Grid,
    ScalarField,
    SpectralField,
    SymTensorField,
    TensorField,
    VectorField,
    divergence_sym_tensor,
    forward_transform,
    inverse_transform,
    make_grid,
    spectral_derivative,
)
from .norms import MollifierSpec, hm_norm, linf_norm, lp_norm, make_mollifier, mollify
from .stokes import StokesParams, solve_stokes_spectral

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "make_grid",
    "ScalarField",
    "VectorField",
    "TensorField",
    "SymTensorField",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "spectral_derivative",
    "divergence_sym_tensor",
    "hm_norm",
    "lp_norm",
    "linf_norm",
    "MollifierSpec",
    "make_mollifier",
    "mollify",
    "StokesParams",
    "solve_stokes_spectral",
    "PhysicalParams",
    "TimeStepperConfig",
    "Status",
    "rhs_F",
    "rhs_F_mollified",
    "make_rhs",
    "step_rk4",
    "integrate",
]

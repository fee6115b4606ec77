"""Pseudo-spectral tools for the hydrostatic Stokes / primitive equations on ``T^2 x (z0, z1)``.

Modules
-------
domain     grids and spectral transforms
field      field containers and anisotropic norms
vcalc      vertical fractional calculus and the vertical heat semigroup
hops       horizontal multipliers and the hydrostatic Helmholtz projection
semigroup  the hydrostatic Stokes semigroup and its smoothing composites
solver     nonlinearity, Picard iteration, time stepping, recursion, life span
verify     numerical checks of the smoothing and interpolation estimates
cli        command-line entry point
"""

__version__ = "0.1.0"

from .domain import BC, Domain, ShapeError
from .field import HorizontalField, NormReport, PhysicalField, norm_inf_p, norm_report, norm_sobolev
from .semigroup import StokesSemigroup
from .solver import (
    BlowUpError,
    IterationTrace,
    MildSolution,
    NonConvergenceError,
    etd_solve,
    majorant_recursion,
    picard_solve,
)
from .verify import EstimateReport, run_suite

__all__ = [
    "BC", "Domain", "ShapeError", "HorizontalField", "NormReport", "PhysicalField",
    "norm_inf_p", "norm_report", "norm_sobolev", "StokesSemigroup", "BlowUpError",
    "IterationTrace", "MildSolution", "NonConvergenceError", "etd_solve", "majorant_recursion",
    "picard_solve", "EstimateReport", "run_suite",
]

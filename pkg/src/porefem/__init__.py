"""Finite-element solver for nonlinear quasi-static poroelasticity in 2D.

The solver works in transformed variables that split the coupled system into
a generalized-Stokes-like deformation problem and a diffusion problem, steps
it with backward Euler plus a per-step fixed-point loop for the quadratic
stress terms, and audits conservation laws and energy identities after the
fact. See the README for the module map and command-line usage.
"""

__version__ = "0.1.0"

from . import diagnostics, fem, linsolve, meshing, params, scenarios, tensors, timestepping, vtkio
from .params import MaterialParams, KappaSet, kappa_from, kappa_limit
from .timestepping import Stepper, Loads, State, PicardConfig

__all__ = [
    "__version__",
    "diagnostics", "fem", "linsolve", "meshing", "params",
    "scenarios", "tensors", "timestepping", "vtkio",
    "MaterialParams", "KappaSet", "kappa_from", "kappa_limit",
    "Stepper", "Loads", "State", "PicardConfig",
]

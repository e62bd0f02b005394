"""Pseudo-spectral simulator and verification harness for the 2D Boussinesq
perturbation system with horizontal-only dissipation on the strip T x R."""

from .dynamics import NonFiniteStateError, RunResult, Stepper, nonlinear_rhs, run, step
from .grid import Field, Grid, GridSpec, Spectrum, derivative, forward, inverse, make_grid
from .state import PhysParams, State, velocity_from_vorticity

__all__ = [
    "Field", "Grid", "GridSpec", "NonFiniteStateError", "PhysParams", "RunResult",
    "Spectrum", "State", "Stepper", "derivative", "forward", "inverse", "make_grid",
    "nonlinear_rhs", "run", "step", "velocity_from_vorticity",
]

__version__ = "0.1.0"

"""Damped 1D wave equation with dynamic (second-order) boundary conditions:
Euler-Lagrange discretization, symplectic integration, PI boundary regulation
and numerical Lyapunov certification."""

from .discretize import (DiscreteSystem, Grid, GridError, build_grid,
                         build_system)
from .integrate import (DivergenceError, PIController, SimState, Trajectory,
                        default_dt, simulate, spectrum)
from .lyapunov import (CertificationReport, DecayFit, FunctionalSample,
                       certify, choose_ell, energy, fit_decay, gamma,
                       v_functional)
from .model import (BoundaryVariant, ContinuousState, ControlParams,
                    ParameterError, PhysicalParams, regulation_transform,
                    steady_profile, u_star)

__all__ = [
    "BoundaryVariant", "CertificationReport", "ContinuousState",
    "ControlParams", "DecayFit", "DiscreteSystem", "DivergenceError",
    "FunctionalSample", "Grid", "GridError", "PIController", "ParameterError",
    "PhysicalParams", "SimState", "Trajectory", "build_grid", "build_system",
    "certify", "choose_ell", "default_dt", "energy", "fit_decay", "gamma",
    "regulation_transform", "simulate", "spectrum", "steady_profile",
    "u_star", "v_functional",
]

__version__ = "0.1.0"

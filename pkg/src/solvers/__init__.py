"""
Numerical solvers for radial focusing waves

Spectral calculus, linear and nonlinear flows, exterior channels of energy,
singular stationary profiles and frequency-envelope diagnostics.
"""

from .spectral import SpectralBasis, LPProfile, build_basis
from .linear_wave import Trajectory, free_flow, exterior_energy
from .channels import ExteriorState, project, channel_verify
from .nonlinear import conserved_energy, evolve, levine_experiment
from .stationary import StationaryProfile, shoot_stable, rescale
from .envelope import make_v, envelope, tails_report

__all__ = [
    "SpectralBasis",
    "LPProfile",
    "build_basis",
    "Trajectory",
    "free_flow",
    "exterior_energy",
    "ExteriorState",
    "project",
    "channel_verify",
    "conserved_energy",
    "evolve",
    "levine_experiment",
    "StationaryProfile",
    "shoot_stable",
    "rescale",
    "make_v",
    "envelope",
    "tails_report",
]

"""Simulation and verification toolkit for the covariant Hopfield model:
electromagnetic field coupled to polarization oscillators in a dispersive
lossless dielectric, with constrained (Dirac) quantization checks, Fano
diagonalization, conserved scalar products and comoving-frame scattering
off traveling susceptibility perturbations."""

from .kinematics import Boost, FourVector, minkowski_dot
from .medium import MediumSpec, OscillatorSpec, PerturbationProfile, rest_medium

__version__ = "0.1.0"

__all__ = [
    "Boost",
    "FourVector",
    "MediumSpec",
    "OscillatorSpec",
    "PerturbationProfile",
    "minkowski_dot",
    "rest_medium",
    "__version__",
]

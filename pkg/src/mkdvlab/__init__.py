"""Numerical laboratory for the modified KdV equation in the critical space:
Airy-Fock kernels, frequency profiles, the cubic nonlinearity and its
stationary-phase expansion, profile evolution, self-similar solutions and
modified scattering."""

from .errors import (ConfigError, ConvergenceError, DomainError, FitError,
                     InstabilityError, MkdvLabError, SupportError)
from .fit import FitResult, fit_power_law
from .profile import FrequencyGrid, Profile, e_norm

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DomainError", "FitError", "InstabilityError",
    "MkdvLabError", "SupportError", "FitResult", "fit_power_law", "FrequencyGrid",
    "Profile", "e_norm",
]

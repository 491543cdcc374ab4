"""Phonon decoupling of a cavity-coupled exciton.

Non-Markovian dynamics from a compressed influence functional, a variational
polaron theory for the coupling renormalisation and polariton scattering
rates, and the photon observables derived from them.
"""

__version__ = "0.1.0"

from .bath import BathSpec, bath_correlation, memory_kernel, pure_dephasing_rate, spectral_density
from .engine import EngineOptions, SimulationResult, simulate
from .errors import (
    DomainError,
    NumericalError,
    PhononDecouplingError,
    ResourceError,
    UsageError,
    ValidationError,
)
from .observables import (
    Spectrum,
    emission_spectrum,
    indistinguishability,
    polariton_asymmetry,
    quantum_efficiency,
    sideband_fraction,
    spectral_correlation_matrix,
)
from .ptensor import ProcessTensor, build_process_tensor, two_time_correlation_grid
from .rates import differential_polariton_rate, epsilon_contributions
from .system import SystemParams
from .varpol import VariationalSolution, solve_variational_displacement

__all__ = [
    "BathSpec",
    "DomainError",
    "EngineOptions",
    "NumericalError",
    "PhononDecouplingError",
    "ProcessTensor",
    "ResourceError",
    "SimulationResult",
    "Spectrum",
    "SystemParams",
    "UsageError",
    "ValidationError",
    "VariationalSolution",
    "bath_correlation",
    "build_process_tensor",
    "differential_polariton_rate",
    "emission_spectrum",
    "epsilon_contributions",
    "indistinguishability",
    "memory_kernel",
    "polariton_asymmetry",
    "pure_dephasing_rate",
    "quantum_efficiency",
    "sideband_fraction",
    "simulate",
    "solve_variational_displacement",
    "spectral_correlation_matrix",
    "spectral_density",
    "two_time_correlation_grid",
]

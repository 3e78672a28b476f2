"""Quantum Brownian motion of an oscillator in a Drude-cutoff Ohmic bath.

Stationary and transient second moments from the exact Heisenberg-Langevin
solution, the Born-Markov and Born non-Markov master equations, and a
finite discrete bath used as an independent check.
"""

from .compare import (
    MethodDifferences,
    SweepResult,
    ValidityReport,
    ValidityThresholds,
    leading_differences,
    method_differences,
    preset_report,
    ratio_sweep,
    validity_report,
)
from .errors import (
    ConvergenceError,
    DiagonalizationFailure,
    DomainError,
    InstabilityError,
    MemoryWindowTooShort,
    NonConvergence,
    OverdampedError,
    PoleError,
    RootFindingFailure,
    QBMError,
    QuadratureFailure,
    ResolutionError,
    ResonanceError,
    StepFailure,
    UnphysicalInitError,
    WindowError,
)
from .exact import (
    correlation_trace,
    noise_kernel_sym,
    stationary_closed,
    stationary_quadrature,
    transient_moments,
)
from .greens import GreenPoles
from .markov import (
    asymptotic_coefficients,
    integrate_markov,
    markov_coefficients,
    stationary_markov,
)
from .nonmarkov import (
    derivative_expansion_fixed_point,
    derivative_kernels,
    integrate_derivative_expansion,
    integrate_nonmarkov,
    memory_kernels,
    stationary_nonmarkov,
)
from .oracle import build_bath, evolve, measure
from .params import (
    BathSpectrum,
    ModelParams,
    derive_params,
    derive_params_from_bare,
    nonohmic_report,
    self_energy_laplace,
    self_energy_time,
    spectral_density,
)
from .specialfn import MatsubaraConfig, coth, digamma, matsubara_F, matsubara_I
from .state import InitialMoments, Method, MomentTrajectory, StationaryMoments
from .sysbath import EnergyFlow, energy_flow, interaction_energy_stationary

__version__ = "0.1.0"

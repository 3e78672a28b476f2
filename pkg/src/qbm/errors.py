"""Exception hierarchy shared by every module of the package."""


class QBMError(Exception):
    """Base class for all errors raised by :mod:`qbm`."""


class DomainError(QBMError, ValueError):
    """Input lies outside the domain of the requested quantity."""


class OverdampedError(DomainError):
    """Renormalized frequency is not above gamma/2, so W is not real."""


class InstabilityError(DomainError):
    """Bare frequency too small for the coupling: gamma*Lambda >= Omega^2."""


class UnphysicalInitError(DomainError):
    """Initial covariance violates the uncertainty relation."""


class PoleError(DomainError):
    """Argument sits on a pole of a meromorphic function."""


class ResonanceError(QBMError, ArithmeticError):
    """Lambda/(2 pi T) is within the guard band of an integer."""


class NonConvergence(QBMError, ArithmeticError):
    """A series or iteration hit its term cap before meeting tolerance."""


class ConvergenceError(NonConvergence):
    """Result changed by more than the tolerance under refinement."""


class QuadratureFailure(QBMError, ArithmeticError):
    """Adaptive quadrature could not certify the requested tolerance."""


class RootFindingFailure(QBMError, ArithmeticError):
    """Polished roots still leave a residual above tolerance."""


class StepFailure(QBMError, ArithmeticError):
    """Time integrator failed to advance within tolerance."""


class MemoryWindowTooShort(DomainError):
    """Memory kernel carries too much weight beyond the truncation window."""


class ResolutionError(DomainError):
    """Requested horizon exceeds what a discrete bath can represent."""


class WindowError(DomainError):
    """Averaging window is not covered by the simulated states."""


class DiagonalizationFailure(QBMError, ArithmeticError):
    """Normal-mode decomposition failed or is not positive."""

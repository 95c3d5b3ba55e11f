"""Exception types raised across the package."""


class VibraqError(Exception):
    """Base class for all package errors."""


class CapExceeded(VibraqError):
    """A dense realization would exceed the configured qubit cap."""


class DimensionMismatch(VibraqError, ValueError):
    pass


class DegenerateGround(VibraqError):
    """The ground level is degenerate within tolerance."""


class PerturbationInvalid(VibraqError):
    """A perturbation couples degenerate eigenstates."""


class SpectrumViolation(VibraqError):
    """Eigenvalues of the normalized shifted Hamiltonian leave the kappa window."""


class InvalidPrecision(VibraqError, ValueError):
    pass


class InvalidBounds(VibraqError, ValueError):
    pass


class PreconditionViolated(VibraqError, ValueError):
    pass


class UnstableMode(VibraqError):
    """Non-positive spring constant: the geometry is not at a minimum along this mode."""

    def __init__(self, message, mode=None, spring_constant=None):
        super().__init__(message)
        self.mode = mode
        self.spring_constant = spring_constant


class ValidationError(VibraqError, ValueError):
    """A job file failed schema or semantic validation."""

"""Exception types shared across the package.

Every failure mode named in a module contract maps to one of these, so
callers can distinguish bad inputs (DomainError, ConfigError) from numerical
failures (IterationError, BlowUpError, BracketError) without string matching.
"""


class MeanFieldError(Exception):
    """Base class for all package errors."""


class DomainError(MeanFieldError):
    """Input outside the documented domain (mismatched grids, bad shapes, ...)."""


class UnsupportedDomainError(DomainError):
    """Operation not defined on this spatial domain (e.g. free energy on the line)."""


class InvariantViolation(MeanFieldError):
    """A declared data invariant failed (unnormalized density, negative mass, ...)."""


class ConfigError(MeanFieldError):
    """Inconsistent or incomplete configuration (CFL violation, missing inputs)."""


class BlowUpError(MeanFieldError):
    """A particle trajectory left the sane range; carries the particle index."""

    def __init__(self, message, particle_index=None, time=None):
        super().__init__(message)
        self.particle_index = particle_index
        self.time = time


class IterationError(MeanFieldError):
    """A fixed-point or time-stepping loop failed to converge; carries the residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BracketError(MeanFieldError):
    """A bracketing root solve found no sign change on the given interval."""


class EstimationError(MeanFieldError):
    """An estimator could not be evaluated (degenerate path, bracket failure)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InsufficientSampleError(MeanFieldError):
    """A statistical diagnostic was asked to run on too few samples."""

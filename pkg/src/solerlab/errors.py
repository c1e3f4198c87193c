"""Exception hierarchy shared by the solvers and the command-line tool."""


class SolerLabError(Exception):
    """Base class for all errors raised by solerlab."""


class ConfigurationError(SolerLabError, ValueError):
    """Unsupported parameter combination or invalid solver settings."""


class DomainError(SolerLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class UnsupportedSymmetryError(SolerLabError):
    """The requested symmetry does not exist for this algebra (no matrix B)."""


class NumericalError(SolerLabError, RuntimeError):
    """A numerical procedure failed to converge or produced garbage."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log) if log is not None else []


class NoSolutionError(NumericalError):
    """The shooting bracket does not contain a sign change of the shooting map."""


class IterationError(NumericalError):
    """A fixed-point iteration did not converge; ``log`` holds the residual history."""


class BlowUpError(NumericalError):
    """Time integration produced a non-finite or exploding field."""

    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time


class UnsupportedNonlinearityError(ConfigurationError):
    """The nonlinearity is not differentiable where the operation needs it."""

class EITError(Exception):
    """Base class for errors raised by this package."""


class GeometryError(EITError):
    pass


class InvalidLayoutError(EITError):
    pass


class ResolutionError(EITError):
    """Initial mesh too coarse to resolve the electrode layout."""


class InvalidImpedanceError(EITError):
    pass


class InvalidDataError(EITError):
    """Current or voltage vector outside the sum-zero subspace."""


class ConvergenceError(EITError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StaleSolutionError(EITError):
    """A state or adjoint was computed for a different conductivity."""


class ConfigError(EITError):
    pass


class NotNestedError(EITError):
    pass

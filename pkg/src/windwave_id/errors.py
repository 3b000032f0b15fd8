"""Exception types shared across the package."""


class WindWaveError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(WindWaveError, ValueError):
    """An array argument has the wrong shape."""


class ParameterError(WindWaveError, ValueError):
    """A physical or numerical parameter is outside its valid range."""


class StructureError(WindWaveError, ValueError):
    """A parameter matrix violates its structure mask."""


class DomainError(WindWaveError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class InterpolationRangeError(WindWaveError, ValueError):
    """A tabulated quantity was requested outside the tabulated range."""


class ConfigurationError(WindWaveError, ValueError):
    """A model or scenario configuration is inconsistent.

    ``path`` names the offending field (dotted), when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ModeError(WindWaveError, ValueError):
    """A force model was asked for a mode it does not act on."""


class FitError(WindWaveError, RuntimeError):
    """Kernel identification failed; ``residual`` holds the RMS residual."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (rms residual {residual:.3e})"
        super().__init__(message)


class DivergenceError(WindWaveError, RuntimeError):
    """Time integration or adaptation produced non-finite or runaway values.

    ``time`` is the simulated time of failure and ``partial`` the trace
    computed up to (excluding) the failing sample, if available.
    """

    def __init__(self, message, time=None, partial=None):
        self.time = time
        self.partial = partial
        if time is not None:
            message = f"{message} at t = {time:.4f} s"
        super().__init__(message)


class IngestionError(WindWaveError, ValueError):
    """A data file could not be imported."""


class MetricError(WindWaveError, ValueError):
    """A fidelity metric is undefined for the given input."""


class ValidationError(WindWaveError, ValueError):
    """Inputs to a pipeline command are mutually inconsistent."""

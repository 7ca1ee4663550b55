"""Exception types shared across the package."""


class PulseJcmError(Exception):
    """Base class for all library errors."""


class DimensionError(PulseJcmError, ValueError):
    """Operator or state dimensions are invalid or inconsistent."""


class CapacityError(PulseJcmError, ValueError):
    """A requested tensor-product dimension exceeds the supported capacity."""


class TruncationError(PulseJcmError, ValueError):
    """A field state does not fit the requested Fock truncation."""


class PulseWindowError(PulseJcmError, ValueError):
    """Pulse support is clipped too severely by the simulation window."""


class ResolutionError(PulseJcmError, ValueError):
    """A discretized solver was given too coarse a grid for the problem."""


class ConfigValidationError(PulseJcmError, ValueError):
    """A scenario configuration failed validation.

    ``fields`` lists the dotted paths of the offending entries.
    """

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class StiffnessError(PulseJcmError, RuntimeError):
    """Adaptive step size underflowed; reports the time of failure."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class StateCorruptionError(PulseJcmError, RuntimeError):
    """A density matrix violated trace or positivity bounds during evolution."""


class NumericalFailureError(PulseJcmError, RuntimeError):
    """A numerical routine produced non-finite values."""

"""Exception types shared across the toolkit."""


class ModelAssumptionError(ValueError):
    """A model bound or family-specific assumption is violated."""


class GaugeError(ValueError):
    """A field-amplitude vector was passed in the wrong gauge."""


class NormalizationError(ValueError):
    """A wave function is not normalized within its tolerance."""


class CapacityError(ValueError):
    """A requested object exceeds the configured memory cap."""


class SolverError(RuntimeError):
    """An iterative solver failed to reach its target residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class TruncationError(RuntimeError):
    """A Fock-space cutoff is too small for the requested state."""

    def __init__(self, message: str, required_n_max: int | None = None):
        super().__init__(message)
        self.required_n_max = required_n_max


class ConsistencyError(RuntimeError):
    """Two internally equivalent evaluations disagree beyond tolerance."""

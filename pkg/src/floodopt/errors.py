"""Exception hierarchy shared across the package."""


class FloodoptError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(FloodoptError):
    """An array argument has the wrong shape or length."""


class ParameterError(FloodoptError):
    """A configuration value is outside its documented domain."""


class BoundsError(FloodoptError):
    """A control vector violates the admissible box (project first)."""


class NumericalError(FloodoptError):
    """A linear-algebra step failed beyond recoverable jitter."""


class StationaryEnsembleError(FloodoptError):
    """All ensemble perturbations produced identical objective values,
    so no search direction exists; the optimizer reports convergence."""


class SimulationError(FloodoptError):
    """A reservoir simulation could not be completed for the given control."""

    def __init__(self, message: str, *, step: int | None = None, reason: str = ""):
        super().__init__(message)
        self.step = step
        self.reason = reason


class ConsistencyError(SimulationError):
    """The simulator produced a non-physical state (internal bug guard)."""


class TrainingError(FloodoptError):
    """Surrogate training failed in every restart."""


class ConfigError(FloodoptError):
    """A run configuration or deck file cannot be interpreted."""

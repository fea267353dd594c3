"""Exception hierarchy."""


class SwarmError(Exception):
    """Base class for all package errors."""


class ConfigError(SwarmError, ValueError):
    """Invalid configuration value, unknown key or bad argument."""


class GeometryError(SwarmError, ValueError):
    """Singular geometry, e.g. a UAV sitting exactly on an antenna."""


class CollisionError(GeometryError):
    """Two UAVs share one lattice point."""


class InitError(SwarmError, RuntimeError):
    """No connected neighbor graph found within the retry budget."""


class RestrictedActionError(SwarmError, ValueError):
    """An action outside the restricted action set was applied."""


class InfeasibleError(SwarmError, ValueError):
    """Request exceeds an enumeration budget."""


class ConvergenceError(SwarmError, ArithmeticError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument or parameter lies outside the domain an operation requires."""


class PositivityError(RuntimeError):
    """A single discrete step left the open positive quadrant."""


class SimulationError(RuntimeError):
    """Integration failed; carries the time at which it did.

    Raised when the reject-and-halve positivity policy runs out of
    halvings at some step.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ConfigError(ValueError):
    """A run configuration is invalid; carries the offending key path."""

    def __init__(self, key_path: str, message: str):
        super().__init__(f"{key_path}: {message}")
        self.key_path = key_path


class InsufficientSampleError(DomainError):
    """Too few observations for the requested statistic."""


class DegenerateSampleError(DomainError):
    """Sample has no spread; density estimation is undefined."""


class NonFiniteEstimateError(ArithmeticError):
    """A Monte-Carlo estimate overflowed or produced NaN."""

"""Exception types raised across the package."""


class AbmrcError(Exception):
    """Base class for all package errors."""


class DomainError(AbmrcError, ValueError):
    """An argument lies outside the domain of a function."""


class ContractError(AbmrcError, ValueError):
    """Shapes or sizes of the inputs do not agree."""


class ConfigurationError(AbmrcError, ValueError):
    """Invalid configuration value or inconsistent settings."""


class IntegrationError(AbmrcError, ArithmeticError):
    """Non-finite values appeared during time integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NumericError(AbmrcError, ArithmeticError):
    """Non-finite intermediate in a pairwise computation."""

    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


class SweepError(AbmrcError, RuntimeError):
    """The forward-backward sweep diverged."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class SnapshotError(AbmrcError, ValueError):
    """Snapshot data cannot produce a reduced basis."""


class StepError(AbmrcError, RuntimeError):
    """A phase of a two-level step failed."""

    def __init__(self, message, phase):
        super().__init__(message)
        self.phase = phase


class GenerationError(AbmrcError, RuntimeError):
    """Initial-condition generation failed."""

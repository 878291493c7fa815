"""Exception hierarchy shared by every hypermod module."""


class HypermodError(Exception):
    """Base class for all library errors."""


class DomainError(HypermodError, ValueError):
    """An argument lies outside the domain of an operation."""


class InfeasibleError(HypermodError):
    """A requested quantity does not exist for the given inputs."""


class MisuseError(HypermodError):
    """An operation was called on inputs that break its preconditions."""


class ConstructionError(HypermodError):
    """A budgeted search inside a construction failed to finish."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(HypermodError):
    """A run configuration is malformed or incomplete."""

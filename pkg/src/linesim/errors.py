"""Exception types shared across the package."""


class LinesimError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(LinesimError):
    """An argument violates its documented domain."""


class ModeNotAllowedError(LinesimError):
    """An agent mode tried to use an edge it is not permitted on."""


class NoPathError(LinesimError):
    """No route exists between the requested endpoints."""


class DeadEndError(LinesimError):
    """A policy was asked to act in a state with no legal action."""


class InfeasibleScenarioError(LinesimError):
    """Scenario demands agents that the city cannot carry."""


class InsufficientHistoryError(LinesimError):
    """Feature extraction requested a time before the trace starts."""


class InsufficientDataError(LinesimError):
    """A training routine received an empty or unusable sample set."""


class UndefinedMetricError(LinesimError):
    """A metric denominator is zero or otherwise undefined."""


class ConfigError(LinesimError):
    """Scenario configuration is malformed or violates a bound."""


class TraceImportError(LinesimError):
    """External trace file violates the import schema."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class SimulationError(LinesimError):
    """The engine reached an unrecoverable state."""

"""Errors raised by the simulator.

Normal packet outcomes (overflow, outage, interruption, MEC-mobility discard) are
job outcomes, not exceptions. These classes cover programming errors, invalid
configuration and I/O problems.
"""
from typing import List, Optional


class SimulatorError(Exception):
    """Base class for every error raised by the simulator."""


class SchedulingError(SimulatorError):
    """An event was scheduled before the current virtual time."""


class EventHandlerError(SimulatorError):
    """A handler raised while dispatching an event; the run is aborted."""

    def __init__(self, event, cause: BaseException):
        self.event = event
        self.cause = cause
        super().__init__(f"Handler for {event.describe()} failed: {cause!r}")


class ConfigurationError(SimulatorError, ValueError):
    """Invalid scenario, layout or metrics configuration."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        self.diagnostics = diagnostics or [message]
        super().__init__(message)


class UnknownAxisError(ConfigurationError):
    """A sweep named a parameter that cannot be swept."""


class InfeasibleAssignmentError(SimulatorError, ValueError):
    """Total MEC capacity is smaller than the number of UEs to assign."""


class ExportError(SimulatorError):
    """Output could not be written; the message names the path."""

"""Exception types shared across the package."""


class ProcwatchError(Exception):
    """Base class for all errors raised by this package."""


class ProcessGone(ProcwatchError):
    """The target pid's kernel entry vanished: the process exited."""


class PermissionDenied(ProcwatchError):
    """The kernel refused access to a per-process entry."""


class ParseError(ProcwatchError):
    """A kernel-exposed record did not match the documented layout."""


class InvalidWindow(ProcwatchError):
    """CPU percentage requested over a non-positive time window."""


class ConfigError(ProcwatchError):
    """Contradictory or out-of-range configuration values."""


class UsageError(ProcwatchError):
    """Malformed command line; carries a usage synopsis."""


class SpawnFailed(ProcwatchError):
    """The target command could not be executed."""

    def __init__(self, message: str, errno: int | None = None):
        super().__init__(message)
        self.errno = errno


class NoSuchProcess(ProcwatchError):
    """An attach target pid does not exist."""


class TargetExited(ProcwatchError):
    """The monitored root process is gone; the sampling loop must stop.

    Signals loop termination, not a failure.
    """


class OutputError(ProcwatchError):
    """A sink write failed."""

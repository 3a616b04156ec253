"""Exception types shared across the package."""


class ScalebenchError(Exception):
    """Base class for all scalebench-specific errors."""


class ConfigError(ScalebenchError, ValueError):
    """A configuration object or file violates its invariants."""


class StateError(ScalebenchError, RuntimeError):
    """An operation was called in a state that does not allow it,
    e.g. stepping an environment after the episode ended."""


class ProtocolError(ScalebenchError):
    """The bridge peer sent something the wire protocol does not allow."""

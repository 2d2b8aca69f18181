"""Exception hierarchy. The CLI maps these onto exit codes."""


class AccPercError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(AccPercError, ValueError):
    """Invalid parameters or malformed specs."""

    exit_code = 2


class CapacityError(AccPercError):
    """A size cap (tree materialization, block size, polynomial degree) was exceeded."""

    exit_code = 3


class AccuracyError(AccPercError):
    """A numerical method failed to reach its requested tolerance."""

    exit_code = 3

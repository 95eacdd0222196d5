"""Exception hierarchy shared by all modules."""


class ChannelModelError(Exception):
    """Base class for every error raised by :mod:`inhchannel`."""


class DomainError(ChannelModelError, ValueError):
    """An argument lies outside the domain of the model (d < 1 m, f <= 0, ...)."""


class ConfigurationError(ChannelModelError):
    """Invalid or unsupported configuration (missing registry entry, bad table, schema)."""


class DegenerateDesignError(ChannelModelError):
    """The fitting design matrix cannot identify the requested parameters."""


class FitFailureError(ChannelModelError):
    """A fit converged to parameters outside the model's admissible region."""


class DataFormatError(ChannelModelError):
    """Malformed or empty input data file."""

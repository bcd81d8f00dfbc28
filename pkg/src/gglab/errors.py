"""Exception hierarchy shared by every module."""


class GGLabError(Exception):
    """Base class for library errors."""


class InputError(GGLabError, ValueError):
    """Malformed words, files or arguments."""


class ConfigurationError(GGLabError):
    """A presentation or parameter set the requested operation cannot use."""


class DomainError(GGLabError, ValueError):
    """Arguments outside the mathematical domain (empty sets, disconnected points)."""


class ResourceError(GGLabError):
    """A vertex, quadruple or tuple budget would be exceeded."""

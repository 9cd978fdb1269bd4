"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """An argument is outside the operation's domain."""


class UnsupportedError(ArgumentError):
    """The (alphabet, fan-in, kind) combination is not handled."""


class ModeError(ArgumentError):
    """Exact and floating values were mixed in one computation."""


class ConfigurationError(ValueError):
    pass


class ResourceError(RuntimeError):
    """A size or enumeration budget would be exceeded."""

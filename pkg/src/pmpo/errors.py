"""Error taxonomy shared across the package.

All four are ValueError subclasses so callers that don't care about the
distinction can catch the base class. The CLI maps ConfigError to exit
code 2 and everything else raised at runtime to exit code 3.
"""


class InputError(ValueError):
    """An argument is outside an operation's domain (shape, range, family)."""


class CapacityError(ValueError):
    """An exact enumeration was requested over a support that is too large."""


class DegenerateInputError(ValueError):
    """A normalizer is zero, so the requested quantity is undefined."""


class ConfigError(ValueError):
    """An experiment or trainer configuration failed validation."""

"""Exception hierarchy shared by all repstat modules."""


class RepstatError(Exception):
    """Base class for all repstat errors."""


class InputError(RepstatError):
    """Invalid argument or malformed input data (CLI exit code 2)."""


class ConfigError(InputError):
    """Invalid model or run configuration (CLI exit code 2)."""


class CapabilityError(RepstatError):
    """Requested computation is not supported for this model kind or
    exceeds the configured enumeration budget (CLI exit code 3)."""


class DomainError(RepstatError):
    """Mathematically undefined request, e.g. conditioning on a
    zero-probability context (CLI exit code 2)."""

"""Repetition statistics of strings, exact block entropies of small process
models, and a reproducible Monte Carlo harness for the inequalities that
link the two."""

from .errors import CapabilityError, ConfigError, DomainError, InputError, RepstatError
from .sequence import Sequence, concat, from_bytes, from_text

__version__ = "0.1.0"

__all__ = [
    "Sequence",
    "concat",
    "from_bytes",
    "from_text",
    "RepstatError",
    "InputError",
    "ConfigError",
    "CapabilityError",
    "DomainError",
    "__version__",
]

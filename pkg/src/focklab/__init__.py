"""Numerical laboratory for weighted Fock spaces of entire functions."""

from .errors import FocklabError
from .functions import EntireFunction, builtin_function
from .weights import RadialWeight

__version__ = "0.1.0"

__all__ = ["EntireFunction", "FocklabError", "RadialWeight", "builtin_function", "__version__"]

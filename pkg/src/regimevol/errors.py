"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericalError (and
subclasses) -> 3, DataError -> 4.
"""


class RegimevolError(Exception):
    """Base class for all package errors."""


class ParameterError(RegimevolError, ValueError):
    """A parameter lies outside its valid domain."""


class ConfigError(RegimevolError, ValueError):
    """Invalid run configuration (bad file, missing seed, out-of-domain value)."""


class DataError(RegimevolError, ValueError):
    """Unusable input data (malformed CSV rows, unsorted dates, bad prices)."""


class NumericalError(RegimevolError, RuntimeError):
    """A numerical procedure failed (quadrature non-convergence, degeneracy)."""


class FilterDegeneracyError(NumericalError):
    """Every state had zero likelihood at some time step."""

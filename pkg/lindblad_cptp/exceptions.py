"""Errors raised by the integrators, diagnostics and run front-end."""


class LindbladError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionError(LindbladError, ValueError):
    """Operand shapes do not agree."""


class NonFiniteError(LindbladError, ValueError):
    """NaN or Inf found where finite values are required."""


class HermiticityError(LindbladError, ValueError):
    """Input is further from Hermitian than roundoff can explain."""


class PositivityError(LindbladError, ValueError):
    """Input that must be positive semidefinite has a clearly negative eigenvalue."""


class TableauError(LindbladError, ValueError):
    """Butcher tableau is inconsistent, or not usable by a CP scheme."""


class NormalizationError(LindbladError, ValueError):
    """Trace (or factor norm) is zero or negative and cannot be renormalized."""


class GridError(LindbladError, ValueError):
    """Time grids cannot be aligned, or step counts are not increasing."""


class ConfigError(LindbladError, ValueError):
    """Run configuration is malformed or incomplete."""


class InvariantViolation(LindbladError):
    """A run-time monitor found a state that breaks the CPTP contract."""

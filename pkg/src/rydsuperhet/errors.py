"""Exception hierarchy.

Validation problems subclass :class:`ValueError`; numerical breakdowns
subclass :class:`NumericalError`. The CLI maps the two families onto
different exit codes.
"""


class RydSuperhetError(Exception):
    """Base class for all package errors."""


class ValidationError(RydSuperhetError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(RydSuperhetError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class DegenerateDenominator(NumericalError):
    """The G denominator vanished (decay-free resonant input)."""


class SingularSystem(NumericalError):
    """The truncated harmonic block system is numerically singular."""


class NotConverged(NumericalError):
    """An iterative procedure did not meet its convergence criterion."""


class NonConvergent(NumericalError):
    """Doppler quadrature changed too much under node doubling."""


class NoInteriorMax(NumericalError):
    """A maximisation found its optimum on the edge of the bracket."""


class BadGuess(NumericalError):
    """The initial point of a fit gives a non-finite residual."""


class ZeroSlope(ValidationError):
    """A response slope of zero (or less) makes sensitivity undefined."""


class EmptyGrid(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class ConfigError(ValidationError):
    """Bad configuration; ``field`` names the offending key when known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)

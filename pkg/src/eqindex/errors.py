"""Exception hierarchy shared by every module.

Each error class carries an ``exit_code`` used by the command line front end.
"""


class EqIndexError(Exception):
    """Base class for all library errors."""

    exit_code = 4


class ConfigError(EqIndexError, ValueError):
    """Malformed or incomplete scene configuration."""

    exit_code = 2


class ToleranceError(EqIndexError):
    """A numerical check did not meet its declared tolerance."""

    exit_code = 3


class NumericDomainError(EqIndexError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DimensionError(NumericDomainError):
    """Incompatible shapes or fiber ranks."""


class DomainError(NumericDomainError):
    """Argument violates an operation's precondition."""


class BranchError(NumericDomainError):
    """No admissible branch of a multivalued function (log, square root)."""


class RangeError(NumericDomainError):
    """Evaluation point sits on or beyond a singularity."""


class MeshError(NumericDomainError):
    """Quadrature mesh cannot support the requested rule."""


class DegreeOverflowError(NumericDomainError):
    """Polynomial degree exceeds the configured cap."""


class FitError(NumericDomainError):
    """Least-squares fit is too ill-conditioned to trust."""

"""Exception hierarchy.

Everything raised on purpose by this package derives from ``WinnbetaError``
so callers can catch one type at the boundary.
"""


class WinnbetaError(Exception):
    """Base class for all errors raised by this package."""


class IngestionError(WinnbetaError):
    """Malformed or inconsistent input tables."""


class UnknownMetaboliteError(WinnbetaError):
    """Requested metabolite name is not a column of the study matrix."""


class MissingDataError(WinnbetaError):
    """Missing intensities under a policy that cannot absorb them."""


class DegenerateSeriesError(WinnbetaError):
    """A series whose spread is zero where nonzero spread is required."""


class DegeneratePlateError(WinnbetaError):
    """A plate with zero spread while a correction wants to divide by it."""


class GroupSizeError(WinnbetaError):
    """Fewer groups, or smaller groups, than a test can handle."""


class DomainError(WinnbetaError):
    """Argument outside the mathematical domain of a function."""


class FitError(WinnbetaError):
    """Design matrix is rank deficient or otherwise unusable."""


class ParameterError(WinnbetaError):
    """Configuration or argument value outside its allowed range."""

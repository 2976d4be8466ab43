"""Exception hierarchy shared by the whole toolkit.

The three mid-level categories map one-to-one onto CLI exit codes:
data problems exit with 2, numerical degeneracies with 3 and bad
configuration with 4.
"""


class MecSdrError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class DataError(MecSdrError):
    """Input data cannot be loaded, parsed, or shaped as requested."""

    exit_code = 2


class NumericError(MecSdrError):
    """The computation is mathematically degenerate for this input."""

    exit_code = 3


class ConfigError(MecSdrError):
    """Invalid parameter or option combination."""

    exit_code = 4


class DegenerateGroupError(NumericError):
    """A sample group has fewer than two rows."""


class DegeneratePoolError(NumericError):
    """Pooled covariance has no degrees of freedom left."""


class EntropyUndefinedError(NumericError):
    """Every eigenvalue fell below the rank threshold."""


class InvalidBasisError(NumericError):
    """Basis columns are not orthonormal within tolerance."""


class SingularCovarianceError(NumericError):
    """Plain covariance inversion is hopeless for this sample size."""


class UndefinedCorrelationError(NumericError):
    """Correlation requested against a constant vector."""


class DimensionMismatchError(DataError):
    """Operands disagree on the number of variables."""


class SlicingError(DataError):
    """The response cannot be cut into the requested slices."""


class DegenerateSliceError(DataError):
    """A slice is too small for a within-slice covariance."""


class DegenerateSplitError(DataError):
    """A train/test split left one side empty or single-class."""

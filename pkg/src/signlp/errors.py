"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI lives in :mod:`signlp.cli`; library code
raises these and never calls ``sys.exit``.
"""


class SignLPError(Exception):
    """Base class for all package errors."""


class SchemaError(SignLPError):
    """Input file or configuration violates its declared contract."""


class ConfigError(SignLPError):
    """Invalid run configuration (bad flag combination, missing path)."""


class DuplicateKeyError(SchemaError):
    """A (country, variable, date) key appears more than once."""


class UnknownVariableError(SchemaError):
    """A variable name is not declared in the schema."""


class TransformDomainError(SignLPError):
    """A transform was applied to values outside its domain."""


class TransformStateError(SignLPError):
    """A transform was applied twice to the same variable."""


class DegenerateInputError(SignLPError):
    """Input carries no usable variation (e.g. zero-variance surprises)."""


class IdentificationFailureError(SignLPError):
    """Sign restrictions admit no rotation, or the admissible set is not a
    single arc."""


class DegenerateCovarianceError(SignLPError):
    """The 2x2 surprise covariance is not positive definite."""


class DegenerateDesignError(SignLPError):
    """Every design column was dropped as collinear."""


class InsufficientSampleError(SignLPError):
    """Too few usable rows at a horizon to estimate the regression."""

    def __init__(self, message: str, h: int | None = None):
        super().__init__(message)
        self.h = h


class InferenceError(SignLPError):
    """Covariance cannot be formed (e.g. a single time cluster)."""


class CovarianceError(SignLPError):
    """A variance implied by the covariance matrix is materially negative."""


class DegenerateTestError(SignLPError):
    """A test statistic is undefined (zero standard error)."""

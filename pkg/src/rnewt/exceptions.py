"""Exception types raised by rnewt."""


class RnewtError(Exception):
    """Base class for all rnewt errors."""


class EmptyCloud(RnewtError, ValueError):
    """An estimator was handed zero points."""


class NotSymmetric(RnewtError, ValueError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class DimensionMismatch(RnewtError, ValueError):
    """Parameter, covariate and response shapes disagree."""


class SolveFailure(RnewtError, ArithmeticError):
    """The Newton system could not be solved (numerically singular Hessian)."""


class SingularDesign(RnewtError, ArithmeticError):
    """X^T X is not invertible."""


class ConfigError(RnewtError, ValueError):
    """Invalid experiment or solver configuration.

    ``field`` holds the dotted path of the offending key when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class SchemaMismatch(RnewtError, ValueError):
    """Trace files do not follow the expected CSV schema or disagree on scenario."""

"""Exception hierarchy.

Two families: :class:`ConfigError` for invalid inputs or plans (the CLI maps
these to exit code 2) and :class:`NumericalError` for failures that happen
while computing (exit code 3).
"""


class ConfigError(ValueError):
    """Invalid configuration, parameters or inputs."""


class NumericalError(ArithmeticError):
    """A computation produced an unusable result."""


class DivisibilityError(ConfigError):
    """Fine step count is not a multiple of the coarsening factor ``q``."""


class MissingAreasError(ConfigError):
    """Areas conditioning requested on a fine family without ``f`` draws."""


class OutOfIntervalError(ConfigError):
    """Evaluation time lies outside the requested coarse interval."""


class NotAdditiveError(ConfigError):
    """Scheme requires additive (state independent) noise."""


class DimensionError(ConfigError):
    """Scheme does not support the problem dimension."""


class LevelRatioError(ConfigError):
    """Multilevel step sizes are not increasing integer multiples."""


class InvalidRatesError(ConfigError):
    """Convergence orders are non positive."""


class AdmissibilityError(InvalidRatesError):
    """Orders violate ``alpha, beta > gamma / (2 gamma + 1)``."""


class InvalidEpsError(ConfigError):
    """Strong error constant outside ``(0, 1]``."""


class NoReferenceError(ConfigError):
    """Model has no reference value for the quantity of interest."""


class NoPathwiseOracleError(ConfigError):
    """Model/scheme pair has no pathwise exact solution to compare with."""


class NonFiniteStateError(NumericalError):
    """A scheme produced NaN or infinite states.

    ``key`` identifies the random stream (and hence the replication block)
    that failed, so that the run can be reproduced.
    """

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{message} [stream key {key}]")
        self.key = key


class ZeroVarianceError(NumericalError):
    """Sample variance of the control variate vanished."""


class UnstableError(NumericalError):
    """PDE oracle failed its self consistency checks."""


class MaxDepthError(NumericalError):
    """Adaptive quadrature hit its recursion limit before converging."""

"""Exception types shared across the package."""


class LifeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(LifeError):
    """Shapes of inputs are inconsistent."""


class NonFiniteError(LifeError):
    """An input or an intermediate quantity contains NaN or infinity."""


class DegenerateInputError(LifeError):
    """Input has no usable variation (e.g. a constant smoothing axis)."""


class ZeroWeightError(LifeError):
    """All weights are zero where a positive total weight is required."""


class SingularSystemError(LifeError):
    """A linear system could not be solved; raising the ridge may help."""


class NoConvergenceWarning(UserWarning):
    """Iterative solver hit its sweep cap before reaching tolerance."""


class AllNeuronsDroppedError(LifeError):
    """Every candidate subset of an iteration failed the size filter."""

    def __init__(self, iteration: int, ratios):
        self.iteration = iteration
        self.ratios = list(ratios)
        super().__init__(
            f"iteration {iteration} kept zero neurons; observed subset "
            f"ratios {self.ratios} all fall outside the (l, u) bounds"
        )


class TooFewLearnersError(LifeError):
    """An operation needs at least two base learners."""


class WeightsOffSimplexError(LifeError):
    """Ensemble weights must be nonnegative and sum to one."""


class ProbabilityOutOfRangeError(LifeError):
    """Probabilities must lie strictly inside (0, 1)."""


class DegenerateModelError(LifeError):
    """Model output is constant so relative importances are undefined."""


class DegenerateColumnError(LifeError):
    """A column has zero variance and cannot be standardized."""


class MissingTargetError(LifeError):
    """The requested target column is absent from the file."""


class ParseError(LifeError):
    """A data file could not be parsed."""


class SchemaMismatchError(LifeError):
    """A serialized artifact has an unsupported version field."""

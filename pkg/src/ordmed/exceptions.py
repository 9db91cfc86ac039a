"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so keep the taxonomy small: data and
specification problems are ValueErrors, optimizer problems are RuntimeErrors.
"""


class MediationError(Exception):
    """Base class for every error raised by this package."""


class ModelSpecError(MediationError, ValueError):
    """Invalid model parameters (non-finite values, unordered thresholds, bad J/p)."""


class DimensionError(MediationError, ValueError):
    """Covariate vector length does not match the model or dataset dimension."""


class DataValidationError(MediationError, ValueError):
    """Raw records failed validation.

    ``problems`` holds one ``(row_index, field, reason)`` triple per violation,
    covering every bad record rather than just the first.
    """

    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = tuple(problems)


class DegenerateDataError(MediationError, ValueError):
    """Data cannot support the requested fit (missing outcome level, single
    mediator value, rank-deficient design, or an all-failed resampling run)."""


class ConvergenceError(MediationError, RuntimeError):
    """The optimizer stopped without meeting the convergence criteria."""


class SeparationError(ConvergenceError):
    """Parameter norm diverged while the likelihood kept improving; the classic
    complete-separation signature in a logistic-type fit."""


class ConsistencyError(MediationError, RuntimeError):
    """An internal cross-check between two supposedly identical quantities failed."""

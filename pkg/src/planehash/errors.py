"""Exception types raised across the library."""


class PlanehashError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PlanehashError, ValueError):
    """A vector or matrix argument violates a precondition (zero norm, bad shape, non-finite)."""


class InvalidParametersError(PlanehashError, ValueError):
    """A parameter combination is outside its validity region."""


class ThresholdDegeneracyError(PlanehashError, ValueError):
    """Threshold selection produced values violating 0 < t2 < t1 < 1."""


class OptimizationDivergedError(PlanehashError, RuntimeError):
    """The surrogate cost became non-finite during gradient descent."""


class InvalidConfigurationError(PlanehashError, ValueError):
    """A run configuration is inconsistent or incomplete."""


class InvalidStateError(PlanehashError, RuntimeError):
    """An operation was invoked on a state that cannot support it (e.g. empty pool)."""


class UndefinedMetricError(PlanehashError, ValueError):
    """A metric has no defined value for the given inputs (e.g. AP with no positives)."""


class DatasetFormatError(PlanehashError, ValueError):
    """A dataset file is malformed. Carries the offending location when known."""

    def __init__(self, message, row=None, col=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.col = col

"""Exception types shared across the package."""


class DegenerateDistributionError(ValueError):
    """Raised when sampling from an all-zero weight vector."""


class NonConvergenceError(RuntimeError):
    """Raised when a rejection loop exceeds its proposal cap."""


class ModelDegenerateError(RuntimeError):
    """Raised when no eigenvalue survives the rank policy."""


class BudgetError(ValueError):
    """Raised when parameters make an error budget infeasible."""


class SizeGuardError(ValueError):
    """Raised when a brute-force oracle is asked to materialize too much."""


class CapacityError(OverflowError):
    """Raised when a flat tensor index would not fit the index type."""


class DatasetFormatError(ValueError):
    """Malformed dataset file. Carries the offending path and 1-based line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class StageError(RuntimeError):
    """Wraps a failure inside one stage of the training pipeline."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")

"""Exception types raised across the package."""


class ExchPairsError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ExchPairsError, ValueError):
    pass


class DegenerateInputError(ExchPairsError, ValueError):
    """Input carries no spread where spread is required (e.g. constant vectors)."""


class DegenerateExampleError(DegenerateInputError):
    """A generated example has a constant coordinate and cannot be min-max scaled."""


class InsufficientDataError(ExchPairsError, ValueError):
    pass


class UndefinedMetricError(ExchPairsError, ValueError):
    pass


class InternalConsistencyError(ExchPairsError, RuntimeError):
    pass


class TrainingDivergedError(ExchPairsError, RuntimeError):
    pass


class LoadError(ExchPairsError, OSError):
    pass

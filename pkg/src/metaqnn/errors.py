"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Tensor shapes or network widths do not fit together."""


class ParameterError(ValueError):
    """An argument is outside its admissible range."""


class ValidationError(ValueError):
    """An input fails a structural check (Hermiticity, unitarity, ...)."""


class NumericalError(RuntimeError):
    """A computation produced NaN/Inf or an inconsistent result."""


class TrainingAborted(NumericalError):
    """Training hit a non-finite loss.

    ``records`` holds every round completed before the failure, the last of
    which carries the last good parameter snapshot.
    """

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records

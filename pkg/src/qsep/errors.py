"""Exception types raised across the package."""


class QsepError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(QsepError, ValueError):
    pass


class NumericalInconsistencyError(QsepError, ArithmeticError):
    """A quantity that must be real/Hermitian came out otherwise."""


class DegenerateWitnessError(QsepError):
    """The state is numerically indistinguishable from its separable approximation."""


class RegionEmptyError(QsepError):
    pass


class GeneratorStarvedError(QsepError):
    """Rejection sampling stopped finding acceptable states.

    ``diagnostics`` carries the counters gathered before giving up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DatasetLoadError(QsepError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line

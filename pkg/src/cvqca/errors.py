"""Exception hierarchy shared by all modules."""


class CvqcaError(Exception):
    """Base class for package errors."""


class InvalidParameterError(CvqcaError, ValueError):
    pass


class GridTooSmallError(CvqcaError):
    pass


class DegenerateFitError(CvqcaError):
    pass


class NonPositiveVarianceError(CvqcaError):
    pass


class NoPhysicalRootError(CvqcaError):
    pass


class MinimumNotBracketedError(CvqcaError):
    pass


class FitConvergenceError(CvqcaError):
    pass


class MismatchedDataError(CvqcaError, ValueError):
    pass


class ConfigError(CvqcaError, ValueError):
    """Raised when a study configuration fails validation."""


class StudyError(CvqcaError):
    """Raised when a study cannot produce a result (e.g. every run failed)."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

"""Exception hierarchy shared by every module."""


class QdiffError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QdiffError, ValueError):
    """A point lies outside the domain an operation accepts."""


class EvaluationError(QdiffError, ArithmeticError):
    """A potential or auxiliary function produced a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConfigurationError(QdiffError, ValueError):
    """Invalid parameters, unknown names or inconsistent settings."""


class UnsupportedDimensionError(QdiffError, ValueError):
    """Exhaustive grid work requested above the supported dimension."""


class NumericError(QdiffError, RuntimeError):
    """Eigensolver or linear-solve failure."""


class StepError(QdiffError, RuntimeError):
    """An integration step produced a non-finite proposal.

    ``state`` holds the last finite state and ``trajectory`` the partial
    record accumulated before the failure.
    """

    def __init__(self, message, state=None, trajectory=None, step=None):
        super().__init__(message)
        self.state = state
        self.trajectory = trajectory
        self.step = step

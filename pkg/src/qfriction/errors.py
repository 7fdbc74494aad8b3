"""Exception hierarchy shared by the numerical modules and the CLI."""


class QFrictionError(Exception):
    """Base class for library errors."""


class DomainError(QFrictionError, ValueError):
    """Input outside the physical domain of a model (pole, bad parameter)."""


class PoleError(DomainError):
    """Evaluation at or on top of a pole of a response function."""


class ConvergenceError(QFrictionError, RuntimeError):
    """A numerical procedure did not reach its tolerance.

    Parameters
    ----------
    message : str
        Description of the failure.
    estimate : object, optional
        Best value reached before giving up.
    error : float, optional
        Error bound attached to ``estimate``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error

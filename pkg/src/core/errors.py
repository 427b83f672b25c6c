# vim: set expandtab shiftwidth=4 softtabstop=4:

"""Exception types raised by the sbmts library."""


class SbmtsError(Exception):
    """Base class for all sbmts errors."""

    exit_code = 1


class ConfigError(SbmtsError, ValueError):
    """Invalid experiment configuration or command-line usage."""

    exit_code = 1


class DataError(SbmtsError, ValueError):
    """Malformed input data (edge lists, labels, matrices, probability vectors)."""

    exit_code = 2


class NumericalError(SbmtsError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy answer.

    Parameters
    ----------
    message : str
        Description of the failure.
    residual : float, optional
        Residual achieved before giving up, if known.
    """

    exit_code = 3

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual

"""Domain exceptions raised by the spectral solver and its experiments."""

from typing import Any


class SpectralError(Exception):
    """
    Base class for all solver errors, carrying the (msg, input, detail) payload of error responses.
    Attributes:
        msg (str): human readable message
        input (Any): the offending input
        detail (Any): additional information about the failure
        exit_code (int): CLI exit status for this error
        status_code (int): HTTP status code for this error
        t (float | None): solver time of the failure, when raised during a run
        partial (Any): records gathered before a failure inside a run, set by the solver
    """

    exit_code: int = 3
    status_code: int = 500

    def __init__(self, msg: str, _input: Any = None, _detail: Any = None) -> None:

        super().__init__(msg)
        self.msg = msg
        self.input = _input
        self.detail = _detail
        self.t: float | None = None
        self.partial: Any = None

    def to_dict(self) -> dict[str, Any]:

        return {
            "msg": self.msg,
            "error_type": self.__class__.__name__,
            "input": self.input,
            "detail": self.detail,
        }


class ConfigurationError(SpectralError):
    exit_code = 2
    status_code = 400


class ArgumentError(SpectralError, ValueError):
    exit_code = 2
    status_code = 400


class NonPhysicalStateError(SpectralError):
    status_code = 422


class SupportViolationError(SpectralError):
    status_code = 422


class BlowUpError(SpectralError):
    """Raised on non-finite collision output or Runge-Kutta stage."""

    def __init__(
        self,
        msg: str,
        _input: Any = None,
        _detail: Any = None,
        t: float | None = None,
    ) -> None:

        super().__init__(msg, _input, _detail)
        self.t = t


class QuadratureBuildError(SpectralError):
    pass


class CacheInvalidError(SpectralError):
    status_code = 409


class CacheFormatError(SpectralError):
    pass


class AssertionFailure(SpectralError):
    exit_code = 4


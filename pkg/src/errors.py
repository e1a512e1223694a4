"""
Exception hierarchy shared by every package.

Each error carries the process exit code the CLI reports for it:
2 for configuration problems, 3 for data problems, 4 for numerical failures.
"""
from typing import Optional


class LocalizationError(Exception):
    """Base class for all errors raised by this project."""

    exit_code: int = 1


class ConfigError(LocalizationError):
    exit_code = 2


class ParameterError(ConfigError):
    """A numeric parameter is out of its valid range (k >= M, rank > p, ...)."""


class DataError(LocalizationError):
    exit_code = 3


class EmptyRegionError(DataError):
    def __init__(self, message: str = "empty region"):
        super().__init__(message)


class FloorPlanError(DataError):
    pass


class DimensionError(DataError):
    pass


class CorpusParseError(DataError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}"
        if line is not None:
            where += f" line {line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class InsufficientDensityError(DataError):
    def __init__(self, center_index: int, found: int, required: int, radius: float):
        self.center_index = center_index
        super().__init__(
            f"center {center_index} has only {found} raw signals within {radius} m "
            f"({required} required)"
        )


class NumericalError(LocalizationError):
    exit_code = 4


class DegenerateBandwidthError(NumericalError):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message)


class IsolatedNodeError(NumericalError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"node {index} has zero degree (isolated node)")


class DisconnectedGraphError(NumericalError):
    def __init__(self, n_components: int):
        self.n_components = n_components
        super().__init__(
            f"multiple trivial components; embed per component or connect the graph "
            f"({n_components} components)"
        )


class IllPosedCalibrationError(NumericalError):
    pass


class InfiniteGeodesicError(NumericalError):
    pass


class EigenResidualError(NumericalError):
    pass


class StageError(LocalizationError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"[{stage}] {cause}")

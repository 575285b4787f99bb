"""Exception hierarchy shared by every module."""


class FpsqpError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FpsqpError, ValueError):
    """Invalid model, kernel, solver or problem configuration."""


class ShapeError(FpsqpError, ValueError):
    """Array dimensions do not agree."""


class NumericError(FpsqpError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class StructureError(FpsqpError, ValueError):
    """A decision tree is malformed (cycle, dangling child, ...)."""


class ParseError(FpsqpError, ValueError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class TrainingError(FpsqpError, RuntimeError):
    """Training diverged."""

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")


class DescentError(FpsqpError, RuntimeError):
    """The merit directional derivative came out positive."""


class MetricError(FpsqpError, ValueError):
    """A fit metric is undefined for the given data."""

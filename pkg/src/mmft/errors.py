"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MMFTError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MMFTError, ValueError):
    pass


class NumericError(MMFTError, ArithmeticError):
    """NaN or Inf produced (or consumed) by a forward/backward computation."""


class GraphError(MMFTError, RuntimeError):
    """Misuse of the differentiation graph (non-scalar loss, double backward)."""


class ParameterError(MMFTError, ValueError):
    pass


class RangeError(MMFTError, ValueError):
    pass


class InputError(MMFTError, ValueError):
    pass


class UndefinedMetricError(MMFTError, ValueError):
    pass


class ConfigError(MMFTError, ValueError):
    pass


class ParseError(MMFTError, ValueError):
    """Malformed input file; message carries the file name and line/record."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")

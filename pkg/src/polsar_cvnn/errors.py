"""Exception hierarchy shared by every subpackage.

The CLI maps these onto process exit codes: configuration problems exit 2,
bad input data exits 3 and numerical failures exit 4.
"""


class PolsarError(Exception):
    """Base class for all package errors."""


class ShapeError(PolsarError, ValueError):
    """Operand extents are incompatible."""


class ContractViolation(PolsarError, ValueError):
    """A documented precondition was not met by the caller."""


class ConfigError(PolsarError, ValueError):
    """Invalid configuration value, unknown key or unknown scheme."""


class DataError(PolsarError, ValueError):
    """Input data is malformed (non-PSD matrix, zero-power raster, ...)."""


class FormatError(DataError):
    """A binary container could not be decoded.

    ``offset`` is the byte position at which decoding failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericError(PolsarError, ArithmeticError):
    """Non-finite values appeared during training or evaluation."""

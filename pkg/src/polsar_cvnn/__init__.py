"""Complex-valued autoencoders for polarimetric SAR and the decompositions used to judge them."""
from .cxcore import CTensor, tensor, wirtinger_backward
from .errors import (ConfigError, ContractViolation, DataError, FormatError, NumericError, PolsarError,
                     ShapeError)

__version__ = "0.1.0"

__all__ = [
    "CTensor", "tensor", "wirtinger_backward",
    "ConfigError", "ContractViolation", "DataError", "FormatError", "NumericError", "PolsarError", "ShapeError",
]

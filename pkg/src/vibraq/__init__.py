"""Vibrational entropy from ground-state energy curvature via block encodings."""

from .errors import (
    CapExceeded,
    DegenerateGround,
    DimensionMismatch,
    InvalidBounds,
    InvalidPrecision,
    PerturbationInvalid,
    PreconditionViolated,
    SpectrumViolation,
    UnstableMode,
    ValidationError,
    VibraqError,
)
from .operators import LCUOperator, PauliWord

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "DegenerateGround",
    "DimensionMismatch",
    "InvalidBounds",
    "InvalidPrecision",
    "LCUOperator",
    "PauliWord",
    "PerturbationInvalid",
    "PreconditionViolated",
    "SpectrumViolation",
    "UnstableMode",
    "ValidationError",
    "VibraqError",
]

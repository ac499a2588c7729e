"""Binary64 / double-double switch.

Double-double is realised with a private mpmath context at 106 bits of
mantissa. Kernels that support it (the Christoffel chain, the Taylor series of
omega and its reciprocal) take an ``Arithmetic`` and work on either float64
arrays or object arrays of mpf numbers; results are always rounded back to
float64 before leaving the kernel.
"""
import logging
import math
import os
from enum import Enum
from typing import Iterable, Optional

import mpmath
import numpy as np

from .config import (
    AUTO_DOUBLE_DOUBLE_MULTIPLICITY, DEFAULT_PRECISION, DOUBLE_DOUBLE_BITS,
    PRECISION_CHOICES, PRECISION_ENV_VAR,
)
from .errors import DomainError

logger = logging.getLogger(__name__)

_DD = mpmath.MPContext()
_DD.prec = DOUBLE_DOUBLE_BITS


class Precision(Enum):
    DOUBLE = "double"
    DOUBLE_DOUBLE = "double-double"

    @classmethod
    def parse(cls, name: str) -> "Precision":
        key = str(name).strip().lower().replace("_", "-")
        if key not in PRECISION_CHOICES:
            raise DomainError(f"unknown precision {name!r}; expected one of {', '.join(PRECISION_CHOICES)}")
        return cls(key)

    @property
    def extended(self) -> bool:
        return self is Precision.DOUBLE_DOUBLE


def precision_from_env() -> Precision:
    return Precision.parse(os.environ.get(PRECISION_ENV_VAR, DEFAULT_PRECISION))


def resolve(precision: Optional[Precision], r: int = 0, s: int = 0) -> Precision:
    """Pick the working precision, engaging double-double for high multiplicities."""
    if precision is None:
        precision = precision_from_env()
    if precision is Precision.DOUBLE and r + s > AUTO_DOUBLE_DOUBLE_MULTIPLICITY:
        logger.warning("r+s=%d > %d, switching to double-double", r + s, AUTO_DOUBLE_DOUBLE_MULTIPLICITY)
        return Precision.DOUBLE_DOUBLE
    return precision


class Arithmetic:
    """Scalar kernels and array conversion for one precision mode."""

    def __init__(self, precision: Precision):
        self.precision = precision
        if precision.extended:
            self.exp, self.log, self.sqrt = _DD.exp, _DD.log, _DD.sqrt
        else:
            self.exp, self.log, self.sqrt = math.exp, math.log, math.sqrt

    def scalar(self, x):
        return _DD.mpf(float(x)) if self.precision.extended else float(x)

    def array(self, values: Iterable) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if not self.precision.extended:
            return values.copy()
        out = np.empty(values.shape, dtype=object)
        for idx, v in np.ndenumerate(values):
            out[idx] = _DD.mpf(float(v))
        return out

    def zeros(self, n: int) -> np.ndarray:
        return self.array(np.zeros(n))

    @staticmethod
    def to_float(values) -> np.ndarray:
        return np.asarray([float(v) for v in np.ravel(values)], dtype=float).reshape(np.shape(values))

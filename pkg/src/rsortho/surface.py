"""Reflection-matrix models for the three surface kinds."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch


class SurfaceKind(str, Enum):
    RIS = "ris"    # unit-modulus phase shifts
    ARIS = "aris"  # arbitrary complex diagonal
    FRIS = "fris"  # full complex matrix

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class RsConfig:
    """A surface configuration.

    ``values`` holds the phases in radians (RIS), the complex diagonal
    (ARIS) or the full ``n x n`` reflection matrix (FRIS).
    """

    kind: SurfaceKind
    values: np.ndarray

    def __post_init__(self):
        kind = SurfaceKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SurfaceKind.RIS:
            vals = np.asarray(self.values, dtype=float).ravel()
        elif kind is SurfaceKind.ARIS:
            vals = np.asarray(self.values, dtype=np.complex128).ravel()
        else:
            vals = np.asarray(self.values, dtype=np.complex128)
            if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
                raise DimensionMismatch(f"FRIS matrix must be square, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def ris(cls, phases):
        return cls(SurfaceKind.RIS, phases)

    @classmethod
    def aris(cls, alpha):
        return cls(SurfaceKind.ARIS, alpha)

    @classmethod
    def fris(cls, theta):
        return cls(SurfaceKind.FRIS, theta)

    @property
    def n(self):
        return self.values.shape[0]

    def matrix(self):
        """The ``n x n`` reflection matrix Theta."""
        if self.kind is SurfaceKind.RIS:
            return np.diag(np.exp(1j * self.values))
        if self.kind is SurfaceKind.ARIS:
            return np.diag(self.values)
        return self.values

    def sum_power(self):
        if self.kind is SurfaceKind.RIS:
            return float(self.n)
        return float(np.sum(np.abs(self.values) ** 2))

"""Bianchi classes, Milnor-frame states and per-class curvature tables.

Brackets follow ``[f2, f3] = 2 e1 f1``, ``[f3, f1] = 2 e2 f2``,
``[f1, f2] = 2 e3 f3`` with the sign triple ``(e1, e2, e3)`` fixed per class.
The metric is ``g = A f1*f1 + B f2*f2 + C f3*f3``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .exceptions import InvalidInput

__all__ = [
    "BianchiClass",
    "MetricState",
    "Curvatures",
    "sectional_curvatures",
    "scalar_curvature",
    "curvature_values",
]


class BianchiClass(str, enum.Enum):
    SU2 = "su2"
    SL2R = "sl2r"
    E11 = "e11"
    E2 = "e2"
    NIL = "nil"

    @property
    def structure_signs(self) -> tuple[int, int, int]:
        return _SIGNS[self]

    @classmethod
    def parse(cls, value: "str | BianchiClass") -> "BianchiClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInput(f"unknown Bianchi class {value!r}") from None


_SIGNS = {
    BianchiClass.SU2: (1, 1, 1),
    BianchiClass.SL2R: (-1, 1, 1),
    BianchiClass.E11: (1, 0, -1),
    BianchiClass.E2: (1, 1, 0),
    BianchiClass.NIL: (1, 0, 0),
}


@dataclass(frozen=True)
class MetricState:
    """Diagonal left-invariant metric at flow time ``t``."""

    t: float
    A: float
    B: float
    C: float

    def __post_init__(self):
        for name in ("A", "B", "C"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInput(f"metric coefficient {name}={value!r} must be positive")

    @property
    def coeffs(self) -> tuple[float, float, float]:
        return (self.A, self.B, self.C)

    @property
    def product(self) -> float:
        return self.A * self.B * self.C


@dataclass(frozen=True)
class Curvatures:
    """Sectional curvatures of the coordinate 2-planes plus scalar curvature."""

    K23: float
    K31: float
    K12: float

    @property
    def R(self) -> float:
        return 2.0 * (self.K23 + self.K31 + self.K12)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.K23, self.K31, self.K12, self.R)


def _su2(A, B, C):
    P = A * B * C
    k23 = (B - C) ** 2 / P - 3 * A / (B * C) + 2 / B + 2 / C
    k31 = (C - A) ** 2 / P - 3 * B / (C * A) + 2 / A + 2 / C
    k12 = (A - B) ** 2 / P - 3 * C / (A * B) + 2 / A + 2 / B
    return k23, k31, k12


def _e11(A, B, C):
    P = A * B * C
    k23 = ((A - C) ** 2 - 4 * A**2) / P
    k31 = (A + C) ** 2 / P
    k12 = ((A - C) ** 2 - 4 * C**2) / P
    return k23, k31, k12


def _e2(A, B, C):
    P = A * B * C
    k23 = (B - A) * (B + 3 * A) / P
    k31 = (A - B) * (A + 3 * B) / P
    k12 = (A - B) ** 2 / P
    return k23, k31, k12


def _sl2r(A, B, C):
    P = A * B * C
    k23 = (-3 * A**2 + B**2 + C**2 - 2 * B * C - 2 * A * C - 2 * A * B) / P
    k31 = (-3 * B**2 + A**2 + C**2 + 2 * B * C + 2 * A * C - 2 * A * B) / P
    k12 = (-3 * C**2 + A**2 + B**2 + 2 * B * C - 2 * A * C + 2 * A * B) / P
    return k23, k31, k12


def _nil(A, B, C):
    # Milnor's Heisenberg Ricci tensor; gives R = -2A/(BC).
    k23 = -3 * A / (B * C)
    k31 = A / (B * C)
    k12 = A / (B * C)
    return k23, k31, k12


_TABLES = {
    BianchiClass.SU2: _su2,
    BianchiClass.E11: _e11,
    BianchiClass.E2: _e2,
    BianchiClass.SL2R: _sl2r,
    BianchiClass.NIL: _nil,
}


def curvature_values(geometry: BianchiClass, A: float, B: float, C: float):
    """Raw ``(K23, K31, K12)`` floats; the hot path used by the integrator."""
    return _TABLES[geometry](A, B, C)


def sectional_curvatures(geometry, s: MetricState) -> Curvatures:
    geometry = BianchiClass.parse(geometry)
    return Curvatures(*_TABLES[geometry](s.A, s.B, s.C))


def scalar_curvature(geometry, s: MetricState) -> float:
    return sectional_curvatures(geometry, s).R

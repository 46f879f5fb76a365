"""Right-hand sides of the normalized Ricci flow in a Milnor frame.

The positive normalized flow ``dg/dt = 2 Rc - (2/3) R g`` is the time reversal
of the forward normalized flow ``dg/dt = -2 Rc + (2/3) R g``. The polynomial
systems below are written for the gauge ``A*B*C = 4``; for any other product
``p`` the exact flow is the same polynomial multiplied by ``4/p`` (the
curvature tables carry an explicit ``1/(ABC)``), which is 1.0 exactly in the
canonical gauge.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .exceptions import InvalidInput, NormalizationViolation
from .geometry import BianchiClass, MetricState, curvature_values

__all__ = [
    "Direction",
    "FlowSpec",
    "StateDerivative",
    "CANONICAL_PRODUCT",
    "PRODUCT_GUARD",
    "rhs",
    "rhs_from_curvatures",
    "rhs_values",
    "curvature_rhs_values",
    "difference_rates",
]

CANONICAL_PRODUCT = 4.0
PRODUCT_GUARD = 1e-6


class Direction(str, enum.Enum):
    FORWARD = "forward"
    POSITIVE = "positive"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.POSITIVE else -1.0

    @classmethod
    def parse(cls, value: "str | Direction") -> "Direction":
        if isinstance(value, cls):
            return value
        aliases = {"forward": cls.FORWARD, "positive": cls.POSITIVE, "backward": cls.POSITIVE}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InvalidInput(f"unknown flow direction {value!r}") from None


@dataclass(frozen=True)
class FlowSpec:
    geometry: BianchiClass
    direction: Direction = Direction.POSITIVE
    product: float = CANONICAL_PRODUCT

    def __post_init__(self):
        object.__setattr__(self, "geometry", BianchiClass.parse(self.geometry))
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        if not self.product > 0:
            raise InvalidInput(f"product must be positive, got {self.product!r}")


class StateDerivative(NamedTuple):
    dA: float
    dB: float
    dC: float


def _positive_su2(A, B, C):
    dA = -2 / 3 * A * (-A * (2 * A - B - C) + (B - C) ** 2)
    dB = -2 / 3 * B * (-B * (2 * B - A - C) + (A - C) ** 2)
    dC = -2 / 3 * C * (-C * (2 * C - A - B) + (A - B) ** 2)
    return dA, dB, dC


def _positive_e11(A, B, C):
    dA = 2 / 3 * A * (2 * A**2 + A * C - C**2)
    dB = -2 / 3 * B * (A + C) ** 2
    dC = 2 / 3 * C * (2 * C**2 + A * C - A**2)
    return dA, dB, dC


def _positive_e2(A, B, C):
    dA = 2 / 3 * A * (2 * A + B) * (A - B)
    dB = -2 / 3 * B * (2 * B + A) * (A - B)
    dC = -2 / 3 * C * (A - B) ** 2
    return dA, dB, dC


def _positive_sl2r(A, B, C):
    dA = -2 / 3 * (-(A**2) * (2 * A + B + C) + A * (B - C) ** 2)
    dB = -2 / 3 * (-(B**2) * (2 * B + A - C) + B * (A + C) ** 2)
    dC = -2 / 3 * (-(C**2) * (2 * C + A - B) + C * (A + B) ** 2)
    return dA, dB, dC


_POSITIVE = {
    BianchiClass.SU2: _positive_su2,
    BianchiClass.E11: _positive_e11,
    BianchiClass.E2: _positive_e2,
    BianchiClass.SL2R: _positive_sl2r,
}


def _forward_nil(A, B, C, product):
    dA = -16 / 3 * A**3 / product
    dB = 8 / 3 * A**2 * B / product
    dC = 8 / 3 * A**2 * C / product
    return dA, dB, dC


def rhs_values(geometry: BianchiClass, sign: float, product: float, A: float, B: float, C: float):
    """Unchecked flow derivative as a float triple.

    ``sign`` is +1 for the positive flow and -1 for the forward flow.
    """
    if geometry is BianchiClass.NIL:
        dA, dB, dC = _forward_nil(A, B, C, product)
        return -sign * dA, -sign * dB, -sign * dC
    dA, dB, dC = _POSITIVE[geometry](A, B, C)
    if product != CANONICAL_PRODUCT:
        scale = CANONICAL_PRODUCT / product
        dA, dB, dC = dA * scale, dB * scale, dC * scale
    if sign < 0:
        return -dA, -dB, -dC
    return dA, dB, dC


def curvature_rhs_values(geometry: BianchiClass, sign: float, A: float, B: float, C: float):
    """Flow derivative assembled from the sectional-curvature table.

    ``Rc(fi, fi) / g_ii`` is the sum of the sectional curvatures of the two
    coordinate planes containing ``fi``.
    """
    k23, k31, k12 = curvature_values(geometry, A, B, C)
    R = 2.0 * (k23 + k31 + k12)
    dA = 2 * A * (k12 + k31) - 2 / 3 * R * A
    dB = 2 * B * (k12 + k23) - 2 / 3 * R * B
    dC = 2 * C * (k23 + k31) - 2 / 3 * R * C
    return sign * dA, sign * dB, sign * dC


def check_product(spec: FlowSpec, s: MetricState) -> None:
    drift = abs(s.A * s.B * s.C - spec.product)
    if drift > PRODUCT_GUARD * spec.product:
        raise NormalizationViolation(
            f"A*B*C = {s.A * s.B * s.C!r} deviates from {spec.product!r} "
            f"by more than {PRODUCT_GUARD:g} relative"
        )


def rhs(spec: FlowSpec, s: MetricState) -> StateDerivative:
    """Printed polynomial system for ``spec`` evaluated at ``s``.

    Raises:
        NormalizationViolation: if ``A*B*C`` is not within 1e-6 (relative) of
            ``spec.product``.
    """
    check_product(spec, s)
    return StateDerivative(*rhs_values(spec.geometry, spec.direction.sign, spec.product, s.A, s.B, s.C))


def rhs_from_curvatures(spec: FlowSpec, s: MetricState) -> StateDerivative:
    check_product(spec, s)
    return StateDerivative(*curvature_rhs_values(spec.geometry, spec.direction.sign, s.A, s.B, s.C))


def difference_rates(s: MetricState, product: float = CANONICAL_PRODUCT) -> tuple[float, float, float]:
    """Factored SU(2) rates ``(d(A-B), d(A-C), d(B-C))`` for the positive flow.

    Each rate is the difference times a bracket, so the sign of a rate is the
    sign of the difference whenever the bracket is positive, and a vanishing
    difference stays zero.
    """
    A, B, C = s.A, s.B, s.C
    S = A + B + C
    d_ab = 2 / 3 * (A - B) * (2 * A**2 + 2 * A * B + 2 * B**2 - S * C)
    d_ac = 2 / 3 * (A - C) * (2 * A**2 + 2 * A * C + 2 * C**2 - S * B)
    d_bc = 2 / 3 * (B - C) * (2 * B**2 + 2 * B * C + 2 * C**2 - S * A)
    if product != CANONICAL_PRODUCT:
        scale = CANONICAL_PRODUCT / product
        d_ab, d_ac, d_bc = d_ab * scale, d_ac * scale, d_bc * scale
    return d_ab, d_ac, d_bc

"""Closed-form solutions and asymptotic laws used as ground truth."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import DomainError, InconsistentInitialData, InvalidInput, UnknownCase
from .geometry import BianchiClass, MetricState

__all__ = [
    "SOLITON_PREFACTOR",
    "ClosedFormKind",
    "ClosedFormSolution",
    "Pivot",
    "AsymptoticLaw",
    "nil_scalar_curvature",
    "nil_solution",
    "nil_backward_time",
    "e11_symmetric",
    "e11_blowup_time",
    "fixed_point",
    "asymptotic_law",
    "CASE_LABELS",
]

# A ~ sqrt(6)/4 (T - t)^(-1/2) whenever dA/dt ~ (4/3) A^3.
SOLITON_PREFACTOR = math.sqrt(6.0) / 4.0


class ClosedFormKind(str, enum.Enum):
    NIL_EXPLICIT = "NilExplicit"
    E11_SYMMETRIC = "E11Symmetric"
    FIXED_POINT = "FixedPoint"


@dataclass(frozen=True)
class ClosedFormSolution:
    kind: ClosedFormKind
    params: dict
    domain: tuple[float, float]
    closed_left: bool = False

    def contains(self, t: float) -> bool:
        lo, hi = self.domain
        above = t >= lo if self.closed_left else t > lo
        return above and t < hi

    def at(self, t: float) -> MetricState:
        p = self.params
        if self.kind is ClosedFormKind.NIL_EXPLICIT:
            return nil_solution(p["A0"], p["B0"], p["C0"], t)
        if self.kind is ClosedFormKind.E11_SYMMETRIC:
            return e11_symmetric(p["A0"], p["B0"], t)
        return MetricState(t, p["A0"], p["B0"], p["C0"])


def nil_scalar_curvature(A0: float, B0: float, C0: float) -> float:
    return -2.0 * A0 / (B0 * C0)


def nil_backward_time(A0: float, B0: float, C0: float) -> float:
    """Length of the backward existence interval, ``-3/(16 R0)``."""
    return -3.0 / (16.0 * nil_scalar_curvature(A0, B0, C0))


def nil_solution(A0: float, B0: float, C0: float, t: float) -> MetricState:
    """Explicit maximal solution of the forward normalized flow on Nil.

    Defined on ``(3/(16 R0), inf)`` with ``R0 = -2 A0/(B0 C0)``; the backward
    end point is a finite-time singularity where A blows up and B, C collapse.
    """
    if min(A0, B0, C0) <= 0:
        raise InvalidInput("initial coefficients must be positive")
    R0 = nil_scalar_curvature(A0, B0, C0)
    if not t > 3.0 / (16.0 * R0):
        raise DomainError(f"t={t!r} is outside ({3.0 / (16.0 * R0)!r}, inf)")
    base = 1.0 - 16.0 / 3.0 * R0 * t
    return MetricState(t, A0 * base**-0.5, B0 * base**0.25, C0 * base**0.25)


def e11_blowup_time(B0: float) -> float:
    return 3.0 / 32.0 * B0


def e11_symmetric(A0: float, B0: float, t: float) -> MetricState:
    """Exact positive-flow solution on E(1,1) from ``A0 = C0`` with ``A0^2 B0 = 4``.

    ``A = C = sqrt(6)/4 (T - t)^(-1/2)``, ``B = (32/3)(T - t)``, ``T = 3 B0/32``.
    """
    if A0 <= 0 or B0 <= 0:
        raise InvalidInput("initial coefficients must be positive")
    T = e11_blowup_time(B0)
    expected = SOLITON_PREFACTOR * T**-0.5
    if abs(A0 - expected) > 1e-12 * expected:
        raise InconsistentInitialData(
            f"A0={A0!r} does not match sqrt(6)/4 * T^-1/2 = {expected!r} for B0={B0!r}"
        )
    if not (0.0 <= t < T):
        raise DomainError(f"t={t!r} is outside [0, {T!r})")
    rest = T - t
    A = SOLITON_PREFACTOR * rest**-0.5
    return MetricState(t, A, 32.0 / 3.0 * rest, A)


def fixed_point(geometry, s0: MetricState) -> Optional[MetricState]:
    """Return ``s0`` if it is stationary for the positive flow, else None."""
    geometry = BianchiClass.parse(geometry)
    if geometry is BianchiClass.SU2 and s0.A == s0.B == s0.C:
        return s0
    if geometry is BianchiClass.E2 and s0.A == s0.B:
        return s0
    return None


class Pivot(str, enum.Enum):
    BLOWUP_TIME = "BlowupTime"
    INFINITE_TIME = "InfiniteTime"


@dataclass(frozen=True)
class AsymptoticLaw:
    """Per-coefficient power laws ``X ~ prefactor * s^exponent``.

    ``s`` is ``T+ - t`` for a blow-up pivot and ``t`` for an infinite-time
    pivot. A prefactor of None means only its existence is known.
    """

    exponents: tuple[float, float, float]
    prefactors: tuple[Optional[float], Optional[float], Optional[float]]
    pivot: Pivot
    case: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def blowup_indices(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.exponents) if e < 0)

    @property
    def collapsing_indices(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.exponents) if e == 0.25)


_GENERIC = ((-0.5, 0.25, 0.25), (SOLITON_PREFACTOR, None, None), Pivot.BLOWUP_TIME)

_LAWS = {
    (BianchiClass.SU2, "generic"): _GENERIC,
    (BianchiClass.SU2, "symmetric"): ((1.0, 1.0, -2.0), (8 / 3, 8 / 3, 9 / 16), Pivot.INFINITE_TIME),
    (BianchiClass.E11, "generic"): _GENERIC,
    (BianchiClass.E11, "symmetric"): (
        (-0.5, 1.0, -0.5),
        (SOLITON_PREFACTOR, 32 / 3, SOLITON_PREFACTOR),
        Pivot.BLOWUP_TIME,
    ),
    (BianchiClass.E2, "generic"): _GENERIC,
    (BianchiClass.SL2R, "Q1"): _GENERIC,
    (BianchiClass.SL2R, "Q2"): ((0.25, -0.5, 0.25), (None, SOLITON_PREFACTOR, None), Pivot.BLOWUP_TIME),
    (BianchiClass.SL2R, "S0"): (
        (-0.5, -0.5, 1.0),
        (SOLITON_PREFACTOR, SOLITON_PREFACTOR, 32 / 3),
        Pivot.BLOWUP_TIME,
    ),
    (BianchiClass.NIL, "generic"): _GENERIC,
}

CASE_LABELS = {
    geometry: tuple(case for (g, case) in _LAWS if g is geometry) for geometry in BianchiClass
}


def asymptotic_law(geometry, case_label: str) -> AsymptoticLaw:
    geometry = BianchiClass.parse(geometry)
    try:
        exponents, prefactors, pivot = _LAWS[(geometry, case_label)]
    except KeyError:
        raise UnknownCase(f"no asymptotic law for {geometry.value} case {case_label!r}") from None
    return AsymptoticLaw(exponents, prefactors, pivot, case=case_label)

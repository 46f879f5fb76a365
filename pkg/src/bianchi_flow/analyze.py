"""Asymptotic fits, SL(2,R) classification and invariant checks on trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import (
    InsufficientData,
    InvalidInput,
    SameLabel,
    UnknownCase,
    WrongCase,
)
from .flow import CANONICAL_PRODUCT, Direction, FlowSpec, rhs_values
from .geometry import BianchiClass, MetricState
from .integrate import (
    Controls,
    Terminal,
    Trajectory,
    blowup_fit,
    canonicalize,
    integrate,
)
from .oracle import asymptotic_law

__all__ = [
    "COEFF_NAMES",
    "FIT_FLOOR",
    "ExponentFit",
    "EtaEstimate",
    "SL2RClassification",
    "BoundaryBracket",
    "SubRiemannianLimit",
    "InvariantCheck",
    "InvariantReport",
    "BlowupReport",
    "fit_window",
    "fit_exponents",
    "estimate_eta",
    "classify_sl2r",
    "classify_initial",
    "ratio_family",
    "locate_boundary",
    "subriemannian_limit",
    "case_label",
    "invariant_report",
    "analyze_trajectory",
]

COEFF_NAMES = ("A", "B", "C")
# Smallest T+ - t used in fits; keeps the window where double-precision
# trajectories from any reasonable integrator are still trustworthy.
FIT_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# exponent fits


@dataclass(frozen=True)
class ExponentFit:
    exponents: tuple[float, float, float]
    prefactors: tuple[float, float, float]
    r_squared: tuple[float, float, float]
    stderr: tuple[float, float, float]
    window: tuple[float, float]
    n_points: int
    t_plus: float

    @property
    def decades(self) -> float:
        return math.log10(self.window[1] / self.window[0])


def fit_window(rest: np.ndarray, floor: float = FIT_FLOOR, decades: float = 2.0,
               skip: float = 0.5) -> tuple[float, float]:
    """Final ``decades`` of ``T+ - t`` above ``floor``, skipping the last ``skip`` decades."""
    positive = rest[rest > 0]
    if positive.size == 0:
        raise InsufficientData("no samples before the blow-up time")
    lo = max(float(positive.min()) * 10.0**skip, floor)
    hi = lo * 10.0**decades
    if float(positive.max()) < hi * (1 - 1e-12):
        raise InsufficientData(
            f"samples span T+ - t in [{positive.min():.3g}, {positive.max():.3g}], "
            f"need [{lo:.3g}, {hi:.3g}]"
        )
    return lo, hi


def _regress(x, y):
    n = x.size
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx, syy = float(dx @ dx), float(dy @ dy)
    slope = float(dx @ dy) / sxx
    icpt = float(ym - slope * xm)
    resid = dy - slope * dx
    ssr = float(resid @ resid)
    r2 = 1.0 if syy == 0 else max(0.0, 1.0 - ssr / syy)
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else math.inf
    return slope, icpt, r2, stderr


def fit_exponents(traj: Trajectory, t_plus: Optional[float] = None,
                  floor: float = FIT_FLOOR, min_points: int = 8) -> ExponentFit:
    """Least-squares slopes of ``ln X`` against ``ln(T+ - t)`` near the blow-up.

    The window is the final two decades of ``T+ - t`` above ``floor``, with
    the last half-decade of the trajectory excluded to guard against error
    in the blow-up time.
    """
    rest = traj.time_to_blowup(t_plus)
    lo, hi = fit_window(rest, floor)
    mask = (rest >= lo) & (rest <= hi)
    if mask.sum() < min_points:
        raise InsufficientData(f"{int(mask.sum())} samples in fit window, need {min_points}")
    x = np.log(rest[mask])
    out = [_regress(x, np.log(traj.coeffs[mask, i])) for i in range(3)]
    used_t_plus = traj.t_plus_estimate if t_plus is None else t_plus
    return ExponentFit(
        exponents=tuple(o[0] for o in out),
        prefactors=tuple(math.exp(o[1]) for o in out),
        r_squared=tuple(o[2] for o in out),
        stderr=tuple(o[3] for o in out),
        window=(lo, hi),
        n_points=int(mask.sum()),
        t_plus=float(used_t_plus) if used_t_plus is not None else float("nan"),
    )


@dataclass(frozen=True)
class EtaEstimate:
    eta1: float
    eta2: float
    interval1: tuple[float, float]
    interval2: tuple[float, float]
    indices: tuple[int, int]

    def relative_width(self, which: int = 1) -> float:
        lo, hi = self.interval1 if which == 1 else self.interval2
        value = self.eta1 if which == 1 else self.eta2
        return (hi - lo) / value


def estimate_eta(traj: Trajectory, t_plus: Optional[float] = None,
                 floor: float = FIT_FLOOR, exponent_slack: float = 0.05) -> EtaEstimate:
    """Prefactors of the two collapsing coefficients ``X ~ eta (T+ - t)^(1/4)``.

    Each eta is the median of ``X (T+ - t)^(-1/4)`` over the final decade of
    the fit window; the interval is that decade's min and max.
    """
    fit = fit_exponents(traj, t_plus, floor)
    collapsing = [i for i, e in enumerate(fit.exponents) if abs(e - 0.25) <= exponent_slack]
    if len(collapsing) != 2:
        raise WrongCase(
            f"expected two coefficients with exponent 1/4, fitted {np.round(fit.exponents, 4)}"
        )
    rest = traj.time_to_blowup(t_plus)
    lo = fit.window[0]
    mask = (rest >= lo) & (rest <= 10.0 * lo)
    if mask.sum() < 3:
        raise InsufficientData("too few samples in the final decade")
    scaled = [traj.coeffs[mask, i] * rest[mask] ** -0.25 for i in collapsing]
    return EtaEstimate(
        eta1=float(np.median(scaled[0])),
        eta2=float(np.median(scaled[1])),
        interval1=(float(scaled[0].min()), float(scaled[0].max())),
        interval2=(float(scaled[1].min()), float(scaled[1].max())),
        indices=(collapsing[0], collapsing[1]),
    )


# ---------------------------------------------------------------------------
# SL(2,R) classification


@dataclass(frozen=True)
class SL2RClassification:
    label: str
    trigger_time: Optional[float]
    margin: float
    trigger_index: Optional[int] = None


def classify_sl2r(traj: Trajectory) -> SL2RClassification:
    """Label by the first sample with ``A >= B`` (Q1) or ``A <= B - C`` (Q2).

    Neither trigger firing before the trajectory ends is reported as
    ``Undetermined``, which is where the separating set S0 lives.
    """
    if traj.spec.geometry is not BianchiClass.SL2R:
        raise InvalidInput("classification applies to SL(2,R) trajectories only")
    A, B, C = traj.A, traj.B, traj.C
    q1 = A >= B
    q2 = A <= B - C
    fired = np.flatnonzero(q1 | q2)
    if fired.size == 0:
        margin = float(max(A[-1] - B[-1], B[-1] - C[-1] - A[-1]))
        return SL2RClassification("Undetermined", None, margin)
    i = int(fired[0])
    if q1[i]:
        return SL2RClassification("Q1", float(traj.t[i]), float(A[-1] - B[-1]), i)
    return SL2RClassification("Q2", float(traj.t[i]), float(B[-1] - C[-1] - A[-1]), i)


def classify_initial(A0: float, B0: float, C0: float, controls: Optional[Controls] = None,
                     allow_swap: bool = True) -> tuple[SL2RClassification, Trajectory]:
    canon = canonicalize(BianchiClass.SL2R, A0, B0, C0, allow_swap=allow_swap)
    traj = integrate(FlowSpec(BianchiClass.SL2R, Direction.POSITIVE), canon.canonical_initial, controls)
    return classify_sl2r(traj), traj


def ratio_family(ratio: float = 2.0) -> Callable[[float], tuple[float, float, float]]:
    """``x -> (x, ratio*c, c)`` with ``c = sqrt(4/(ratio*x))``, so ``A*B*C = 4`` and ``B >= C``."""
    if ratio < 1:
        raise InvalidInput("ratio must be >= 1 to keep B >= C")

    def family(x: float) -> tuple[float, float, float]:
        c = math.sqrt(CANONICAL_PRODUCT / (ratio * x))
        return (x, ratio * c, c)

    return family


@dataclass(frozen=True)
class BoundaryBracket:
    lo: float
    hi: float
    label_lo: str
    label_hi: str
    midpoint: float
    midpoint_label: str
    c_exponent: Optional[float]
    ab_gap: Optional[float]
    probes: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _pre_trigger_segment(traj: Trajectory, stop: int) -> Trajectory:
    sl = slice(0, stop)
    return Trajectory(
        traj.spec, traj.t[sl], traj.coeffs[sl], traj.curvatures[sl], traj.product_drift[sl],
        traj.tail[sl] - traj.tail[stop - 1], Terminal.BLOWUP_CEILING,
    )


def _s0_diagnostics(traj: Trajectory, cls: SL2RClassification):
    """C-exponent and max ``|A-B|/A`` over the decade before the trigger fired."""
    if cls.trigger_index is None or cls.trigger_index < 12:
        return None, None
    seg = _pre_trigger_segment(traj, cls.trigger_index)
    try:
        _, remaining, _ = blowup_fit(seg)
    except InsufficientData:
        return None, None
    rest = seg.tail + remaining
    last = rest[-1]
    decade = (rest >= last) & (rest <= 10.0 * last)
    gap = float(np.max(np.abs(seg.A[decade] - seg.B[decade]) / seg.A[decade]))
    track = (rest >= last) & (rest <= 100.0 * last)
    exponent = None
    if track.sum() >= 4:
        exponent = _regress(np.log(rest[track]), np.log(seg.C[track]))[0]
    return exponent, gap


def locate_boundary(family: Callable[[float], Sequence[float]], x_lo: float, x_hi: float,
                    tol: float = 1e-6, controls: Optional[Controls] = None) -> BoundaryBracket:
    """Bisect a one-parameter family of SL(2,R) data across the Q1/Q2 boundary."""
    def label(x):
        cls, traj = classify_initial(*family(x), controls=controls, allow_swap=False)
        return cls, traj

    lo_cls, _ = label(x_lo)
    hi_cls, _ = label(x_hi)
    for cls, x in ((lo_cls, x_lo), (hi_cls, x_hi)):
        if cls.label not in ("Q1", "Q2"):
            raise WrongCase(f"endpoint x={x!r} is {cls.label}")
    if lo_cls.label == hi_cls.label:
        raise SameLabel(f"both endpoints are {lo_cls.label}")
    lo, hi = float(x_lo), float(x_hi)
    label_lo, label_hi = lo_cls.label, hi_cls.label
    probes = 2
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        cls, _ = label(mid)
        probes += 1
        if cls.label == label_lo:
            lo = mid
        elif cls.label == label_hi:
            hi = mid
        else:
            raise WrongCase(f"probe x={mid!r} stayed Undetermined; increase max_coeff")
    mid = 0.5 * (lo + hi)
    mid_cls, mid_traj = label(mid)
    exponent, gap = _s0_diagnostics(mid_traj, mid_cls)
    return BoundaryBracket(lo, hi, label_lo, label_hi, mid, mid_cls.label, exponent, gap, probes + 1)


# ---------------------------------------------------------------------------
# case labels and sub-Riemannian limits


def case_label(traj: Trajectory) -> str:
    geometry = traj.spec.geometry
    if traj.spec.direction is Direction.FORWARD:
        return "forward"
    A0, B0, C0 = traj.coeffs[0]
    if geometry is BianchiClass.SU2:
        if A0 == B0 == C0:
            return "fixed"
        return "symmetric" if A0 == B0 else "generic"
    if geometry is BianchiClass.E11:
        return "symmetric" if A0 == C0 else "generic"
    if geometry is BianchiClass.E2:
        return "fixed" if A0 == B0 else "generic"
    if geometry is BianchiClass.SL2R:
        label = classify_sl2r(traj).label
        return "S0" if label == "Undetermined" else label
    return "generic"


_REFERENCE = {
    (BianchiClass.SU2, "generic"): 1,
    (BianchiClass.E11, "generic"): 1,
    (BianchiClass.E2, "generic"): 1,
    (BianchiClass.SL2R, "Q1"): 2,
    (BianchiClass.SL2R, "Q2"): 0,
    (BianchiClass.NIL, "generic"): 2,
}


@dataclass(frozen=True)
class SubRiemannianLimit:
    """Limit of ``(X_ref(0)/X_ref(t)) g(t)`` restricted to the surviving directions."""

    reference: str
    surviving: tuple[str, str]
    limit_metric_coeffs: tuple[float, float]
    dual_coeffs: tuple[float, float]
    coeff_intervals: tuple[tuple[float, float], tuple[float, float]]
    eta_ratio: float
    eta_ratio_interval: tuple[float, float]
    diverging_monotone: bool


def subriemannian_limit(traj: Trajectory, t_plus: Optional[float] = None,
                        geometry=None, case: Optional[str] = None,
                        floor: float = FIT_FLOOR) -> SubRiemannianLimit:
    """Rescaled metric coefficients of the two directions that survive the blow-up."""
    geometry = BianchiClass.parse(geometry or traj.spec.geometry)
    case = case or case_label(traj)
    if geometry is BianchiClass.SL2R and case == "S0":
        raise WrongCase("no rescaling of the S0 behaviour converges to a sub-Riemannian limit")
    if (geometry, case) not in _REFERENCE:
        if (geometry, case) in (
            (BianchiClass.E11, "symmetric"), (BianchiClass.SU2, "symmetric"),
        ):
            raise WrongCase(f"{geometry.value} {case} does not have exactly one diverging coefficient")
        raise UnknownCase(f"no sub-Riemannian limit for {geometry.value} case {case!r}")
    law = asymptotic_law(geometry, case)
    blow = law.blowup_indices[0]
    ref = _REFERENCE[(geometry, case)]
    surviving = tuple(i for i in range(3) if i != blow)
    rest = traj.time_to_blowup(t_plus)
    lo, _ = fit_window(rest, floor)
    mask = (rest >= lo) & (rest <= 10.0 * lo)
    if mask.sum() < 3:
        raise InsufficientData("too few samples in the final decade")
    x_ref0 = float(traj.coeffs[0, ref])
    scale = x_ref0 / traj.coeffs[mask, ref]
    limits, intervals = [], []
    for i in surviving:
        series = scale * traj.coeffs[mask, i]
        limits.append(float(np.median(series)))
        intervals.append((float(series.min()), float(series.max())))
    ratio = traj.coeffs[mask, surviving[1]] / traj.coeffs[mask, surviving[0]]
    diverging = scale * traj.coeffs[mask, blow]
    # samples run toward T+, so the rescaled blow-up coefficient must grow along them
    monotone = bool(np.all(np.diff(diverging) > 0))
    return SubRiemannianLimit(
        reference=COEFF_NAMES[ref],
        surviving=(COEFF_NAMES[surviving[0]], COEFF_NAMES[surviving[1]]),
        limit_metric_coeffs=(limits[0], limits[1]),
        dual_coeffs=(1.0 / limits[0], 1.0 / limits[1]),
        coeff_intervals=(intervals[0], intervals[1]),
        eta_ratio=float(np.median(ratio)),
        eta_ratio_interval=(float(ratio.min()), float(ratio.max())),
        diverging_monotone=monotone,
    )


# ---------------------------------------------------------------------------
# invariants

MONOTONE_SLACK = 1e-10


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violation <= self.tolerance


@dataclass
class InvariantReport:
    checks: list[InvariantCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[InvariantCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> InvariantCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    def add(self, name: str, violation: float, tolerance: float) -> None:
        self.checks.append(InvariantCheck(name, float(violation), tolerance))


def _nondecreasing(x: np.ndarray, scale: np.ndarray) -> float:
    """Largest backward step of ``x`` relative to ``scale``; 0 when monotone."""
    if x.size < 2:
        return 0.0
    drops = -(np.diff(x)) / np.maximum(np.abs(scale[:-1]), 1e-300)
    return float(max(0.0, drops.max()))


def _nonincreasing(x, scale):
    return _nondecreasing(-x, scale)


def invariant_report(traj: Trajectory, drift_tol: float = 1e-9,
                     slack: float = MONOTONE_SLACK) -> InvariantReport:
    """Worst-case violation of every invariant that applies to ``traj``.

    Orderings are checked against the canonical gauge (``A >= B >= C`` for
    SU(2), ``B >= C`` for SL(2,R)), so relabeled or corrupted data fail them.
    Monotonicity facts are checked only when the initial data satisfy the
    hypotheses under which they hold.
    """
    rep = InvariantReport()
    A, B, C = traj.A, traj.B, traj.C
    A0, B0, C0 = traj.coeffs[0]
    geometry, direction = traj.spec.geometry, traj.spec.direction
    positive = direction is Direction.POSITIVE

    rep.add("positivity", max(0.0, -float(traj.coeffs.min())), 0.0)
    gaps = np.diff(traj.t)
    rep.add("time_order", float(max(0.0, -gaps.min())) if gaps.size else 0.0, 0.0)
    if gaps.size and np.any(gaps == 0):
        rep.checks[-1] = InvariantCheck("time_order", 1.0, 0.0)
    rep.add("product_drift", float(traj.product_drift.max()), drift_tol)

    stationary = (geometry is BianchiClass.SU2 and A0 == B0 == C0) or (
        geometry is BianchiClass.E2 and A0 == B0
    )
    if stationary:
        dev = np.abs(traj.coeffs / traj.coeffs[0] - 1.0).max()
        rep.add("fixed_point_stationary", float(dev), 1e-10)

    if geometry is BianchiClass.SU2:
        # canonical gauge is A >= B >= C; each difference keeps its sign along any flow line
        order = max(0.0, float(np.max((B - A) / A)), float(np.max((C - B) / B)))
        rep.add("su2_order", order, slack)
        flips = 0.0
        for x, y in ((A, B), (A, C), (B, C)):
            d = (x - y) / np.maximum(x, y)
            d = np.where(np.abs(d) <= slack, 0.0, np.sign(d))
            flips += float(np.count_nonzero(d != d[0]))
        rep.add("su2_pair_signs_preserved", flips, 0.0)
    if geometry is BianchiClass.SU2 and A0 >= B0 >= C0:
        if positive:
            rep.add("su2_A_nondecreasing", _nondecreasing(A, A), slack)
            rep.add("su2_A_minus_B_nondecreasing", _nondecreasing(A - B, A), slack)
            rep.add("su2_A_minus_C_nondecreasing", _nondecreasing(A - C, A), slack)
            rep.add("su2_C_nonincreasing", _nonincreasing(C, C), slack)
            if A0 == B0 > C0:
                rep.add("su2_A_equals_B", float(np.max(np.abs(A - B) / A)), 1e-10)
                target = A0 * A0 * C0
                rep.add("su2_A2C_conserved", float(np.max(np.abs(A * A * C - target) / target)), 1e-9)

    if geometry is BianchiClass.SL2R:
        rep.add("sl2r_order", max(0.0, float(np.max((C - B) / B))), slack)
    if geometry is BianchiClass.SL2R and B0 >= C0:
        if positive:
            rep.add("sl2r_AB_nondecreasing", _nondecreasing(A * B, A * B), slack)
            rep.add("sl2r_lnAB_sign", _lnab_sign_violation(A, B, C), 0.0)
            if traj.spec.product == CANONICAL_PRODUCT:
                dC = np.array([rhs_values(geometry, 1.0, CANONICAL_PRODUCT, a, b, c)[2]
                               for a, b, c in traj.coeffs])
                rep.add("sl2r_C_rate_bound", max(0.0, float(np.max(dC + 2.0 / 3.0))), 1e-12)
            rep.add("sl2r_Q1_absorbing", _absorbing_violation(A >= B, (B - A) / A), slack)
            rep.add("sl2r_Q2_absorbing", _absorbing_violation(A <= B - C, (A - (B - C)) / A), slack)

    if geometry is BianchiClass.E2 and positive and A0 > B0:
        rep.add("e2_A_nondecreasing", _nondecreasing(A, A), slack)
        rep.add("e2_B_nonincreasing", _nonincreasing(B, B), slack)
        rep.add("e2_C_nonincreasing", _nonincreasing(C, C), slack)
        ab2 = A * B * B
        rep.add("e2_AB2_nonincreasing", _nonincreasing(ab2, ab2), slack)

    if geometry is BianchiClass.E11 and positive and A0 >= C0:
        ratio = A / C
        rep.add("e11_A_over_C_nondecreasing", _nondecreasing(ratio, ratio), slack)
        rep.add("e11_B_nonincreasing", _nonincreasing(B, B), slack)
        if A0 > C0 and traj.terminal is Terminal.BLOWUP_CEILING:
            hits = np.flatnonzero(A >= 2 * C)
            rep.add("e11_reaches_A_ge_2C", 0.0 if hits.size else 1.0, 0.0)
            if hits.size:
                k = int(hits[0])
                rep.add("e11_C_nonincreasing_after_2C", _nonincreasing(C[k:], C[k:]), slack)

    if geometry is BianchiClass.NIL:
        if positive:
            rep.add("nil_A_nondecreasing", _nondecreasing(A, A), slack)
            rep.add("nil_B_nonincreasing", _nonincreasing(B, B), slack)
            rep.add("nil_C_nonincreasing", _nonincreasing(C, C), slack)
        else:
            rep.add("nil_A_nonincreasing", _nonincreasing(A, A), slack)
            rep.add("nil_B_nondecreasing", _nondecreasing(B, B), slack)
            rep.add("nil_C_nondecreasing", _nondecreasing(C, C), slack)
        ratio = B / C
        rep.add("nil_B_over_C_constant", float(np.max(np.abs(ratio / ratio[0] - 1.0))), 1e-12)
    return rep


def _absorbing_violation(condition: np.ndarray, deficit: np.ndarray) -> float:
    hits = np.flatnonzero(condition)
    if hits.size == 0:
        return 0.0
    after = deficit[hits[0]:]
    return float(max(0.0, after.max()))


def _lnab_sign_violation(A, B, C) -> float:
    """Count sample pairs where ``ln(A/B)`` moves against ``2(A+B)(A+C-B)``.

    Only pairs whose endpoints agree on the sign of the rate are judged, and
    moves below rounding level are ignored.
    """
    rate_sign = np.sign(A + C - B)
    step = np.diff(np.log(A / B))
    same = rate_sign[:-1] == rate_sign[1:]
    noise = 1e-12 * (1 + np.abs(np.log(A / B)[:-1]))
    bad = same & (np.abs(step) > noise) & (np.sign(step) != rate_sign[:-1]) & (rate_sign[:-1] != 0)
    return float(bad.sum())


# ---------------------------------------------------------------------------
# one-stop report


@dataclass
class BlowupReport:
    case: str
    terminal: str
    t_plus: Optional[float] = None
    fit: Optional[ExponentFit] = None
    eta: Optional[EtaEstimate] = None
    sl2r: Optional[SL2RClassification] = None
    limit: Optional[SubRiemannianLimit] = None
    invariants: Optional[InvariantReport] = None
    notes: list[str] = field(default_factory=list)


def analyze_trajectory(traj: Trajectory) -> BlowupReport:
    """Run every applicable analysis, recording why any step was skipped."""
    case = case_label(traj)
    rep = BlowupReport(case=case, terminal=traj.terminal.value)
    rep.invariants = invariant_report(traj)
    if traj.spec.geometry is BianchiClass.SL2R and traj.spec.direction is Direction.POSITIVE:
        rep.sl2r = classify_sl2r(traj)
    if traj.terminal is not Terminal.BLOWUP_CEILING or traj.t_plus_estimate is None:
        return rep
    rep.t_plus = traj.t_plus_estimate
    try:
        rep.fit = fit_exponents(traj)
    except InsufficientData as exc:
        rep.notes.append(f"fit: {exc}")
        return rep
    try:
        rep.eta = estimate_eta(traj)
    except (InsufficientData, WrongCase) as exc:
        rep.notes.append(f"eta: {exc}")
    try:
        rep.limit = subriemannian_limit(traj, case=case)
    except (InsufficientData, WrongCase, UnknownCase) as exc:
        rep.notes.append(f"limit: {exc}")
    return rep

"""Oracle-equivalence and invariant suite behind ``bianchi-flow verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .analyze import (
    estimate_eta,
    fit_exponents,
    invariant_report,
    classify_sl2r,
    locate_boundary,
    ratio_family,
)
from .exceptions import BianchiFlowError
from .flow import Direction, FlowSpec, curvature_rhs_values, rhs_values
from .geometry import BianchiClass, MetricState
from .integrate import Controls, Terminal, Trajectory, canonicalize, integrate, scaling_check
from .oracle import SOLITON_PREFACTOR, e11_blowup_time, e11_symmetric, nil_solution

__all__ = ["Check", "FAULTS", "run_suite", "format_table", "SUITE"]

THEORY_GENERIC = (-0.5, 0.25, 0.25)
# blow-up runs stop here if the ceiling is never reached (e.g. under a fault)
BLOWUP_HORIZON = 2.0


@dataclass(frozen=True)
class Check:
    """One row of the suite: worst observed value against its tolerance.

    ``gating=False`` rows are reported but do not affect the exit status.
    """

    name: str
    value: float
    tolerance: float
    gating: bool = True
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tolerance


def _sign_flip(spec: FlowSpec):
    g, s, p = spec.geometry, spec.direction.sign, spec.product
    return lambda A, B, C: tuple(-x for x in rhs_values(g, s, p, A, B, C))


FAULTS: dict[str, Callable] = {"sign-flip": _sign_flip}


class _Context:
    """Shared integration helper that applies the fault and records drift."""

    def __init__(self, fault: Optional[str], controls: Optional[Controls]):
        if fault is not None and fault not in FAULTS:
            raise KeyError(f"unknown fault {fault!r}")
        self.fault = FAULTS.get(fault) if fault else None
        self.controls = controls or Controls()
        self.max_drift = 0.0

    def run(self, geometry, direction, coeffs, horizon=BLOWUP_HORIZON, t_eval=None) -> Trajectory:
        spec = FlowSpec(geometry, direction, float(np.prod(coeffs)))
        rhs = self.fault(spec) if self.fault else None
        traj = integrate(spec, MetricState(0.0, *coeffs), self.controls, horizon=horizon,
                         t_eval=t_eval, rhs=rhs)
        self.max_drift = max(self.max_drift, float(traj.product_drift.max()))
        return traj


def _exponent_dev(traj: Trajectory, theory) -> float:
    fit = fit_exponents(traj)
    return float(max(abs(e - th) for e, th in zip(fit.exponents, theory)))


def _nil_closed_form(ctx: _Context):
    A0, B0, C0 = 1.0, 2.0, 2.0
    times = np.linspace(0.1, 10.0, 100)
    fwd = ctx.run("nil", "forward", (A0, B0, C0), horizon=10.0, t_eval=times)
    worst = 0.0
    for t, row in zip(fwd.t, fwd.coeffs):
        exact = np.array(nil_solution(A0, B0, C0, float(t)).coeffs)
        worst = max(worst, float(np.max(np.abs(row / exact - 1))))
    # forward time -tau is positive-flow time tau
    taus = np.linspace(0.0037, 0.37, 100)
    back = ctx.run("nil", "positive", (A0, B0, C0), horizon=0.37, t_eval=taus)
    for t, row in zip(back.t, back.coeffs):
        exact = np.array(nil_solution(A0, B0, C0, -float(t)).coeffs)
        worst = max(worst, float(np.max(np.abs(row / exact - 1))))
    yield Check("nil closed form over [-0.37, 10]", worst, 1e-8)


def _e11_symmetric(ctx: _Context):
    A0, B0 = 2.0, 1.0
    T = e11_blowup_time(B0)
    traj = ctx.run("e11", "positive", (A0, B0, A0))
    t_plus = traj.t_plus_estimate if traj.t_plus_estimate is not None else math.nan
    yield Check("e11 symmetric blow-up time rel err", abs(t_plus / T - 1), 1e-6)
    mask = traj.time_to_blowup(T) >= 1e-4 if not math.isnan(t_plus) else traj.t < T - 1e-4
    worst = 0.0
    for i in np.flatnonzero(mask):
        exact = e11_symmetric(A0, B0, float(traj.t[i])).coeffs
        worst = max(worst, float(np.max(np.abs(traj.coeffs[i] / exact - 1))))
    yield Check("e11 symmetric closed form to T-t=1e-4", worst, 1e-8)
    fit = fit_exponents(traj)
    yield Check("e11 symmetric B exponent", abs(fit.exponents[1] - 1.0), 0.01)
    yield Check("e11 symmetric B prefactor rel err", abs(fit.prefactors[1] / (32 / 3) - 1), 0.01)


def _su2_generic(ctx: _Context):
    traj = ctx.run("su2", "positive", (2.0, 1.6, 1.25))
    fit = fit_exponents(traj)
    yield Check("su2 generic exponents", _exponent_dev(traj, THEORY_GENERIC), 0.02)
    rest = traj.time_to_blowup()
    mask = (rest >= fit.window[0]) & (rest <= fit.window[1])
    scaled = traj.A[mask] * np.sqrt(rest[mask])
    yield Check("su2 generic A prefactor rel err", float(np.max(np.abs(scaled / SOLITON_PREFACTOR - 1))), 0.01)
    yield _invariants("su2 generic invariants", traj)
    eta = estimate_eta(traj)
    yield Check("su2 generic eta1 >= eta2", max(0.0, eta.eta2 - eta.eta1), 0.0)


def _su2_symmetric(ctx: _Context):
    traj = ctx.run("su2", "positive", (2.0, 2.0, 1.0), horizon=1000.0)
    A, C, t = traj.A[-1], traj.C[-1], traj.t[-1]
    yield Check("su2 A=B: A/t -> 8/3 at t=1000", abs(A / t / (8 / 3) - 1), 0.01)
    yield Check("su2 A=B: C t^2 -> 9/16 at t=1000", abs(C * t * t / (9 / 16) - 1), 0.01)
    a2c = traj.A**2 * traj.C
    yield Check("su2 A=B: A^2 C = 4", float(np.max(np.abs(a2c / 4 - 1))), 1e-9)
    yield _invariants("su2 A=B invariants", traj)


def _e2_generic(ctx: _Context):
    traj = ctx.run("e2", "positive", (2.0, 1.0, 2.0))
    yield Check("e2 exponents", _exponent_dev(traj, THEORY_GENERIC), 0.02)
    yield _invariants("e2 invariants", traj)
    fit = fit_exponents(traj)
    rest = traj.time_to_blowup()
    mask = (rest >= fit.window[0]) & (rest <= 10 * fit.window[0])
    ab2 = float(np.median((traj.A * traj.B**2)[mask]))
    ac2 = float(np.median((traj.A * traj.C**2)[mask]))
    finite = np.isfinite(ab2) and np.isfinite(ac2) and ab2 > 0 and ac2 > 0
    yield Check("e2 lim AB^2, AC^2 finite and positive", 0.0 if finite else 1.0, 0.0)
    eta = estimate_eta(traj)
    yield Check("e2 lim AB^2 = eta1^2 sqrt(6)/4", abs(eta.eta1**2 * SOLITON_PREFACTOR / ab2 - 1), 0.01)
    # holds only when B >= C along the flow; (2,1,2) has B < C throughout
    yield Check("e2 lim AB^2 >= lim AC^2", max(0.0, ac2 - ab2), 0.0, gating=False,
                detail=f"AB^2 -> {ab2:.6g}, AC^2 -> {ac2:.6g}")


def _e11_generic(ctx: _Context):
    canon = canonicalize("e11", 2.0, 2.0, 1.0)
    traj = ctx.run("e11", "positive", canon.canonical_initial.coeffs)
    yield Check("e11 generic exponents", _exponent_dev(traj, THEORY_GENERIC), 0.02)
    rep = invariant_report(traj)
    yield Check("e11 generic reaches A >= 2C", rep["e11_reaches_A_ge_2C"].violation, 0.0)
    hits = np.flatnonzero(traj.A >= 2 * traj.C)
    ratio = (traj.A / traj.C)[hits[0]:] if hits.size else np.array([math.nan])
    drop = float(max(0.0, np.max(-np.diff(ratio) / ratio[:-1]))) if ratio.size > 1 else 0.0
    yield Check("e11 generic A/C nondecreasing after A >= 2C", drop, 1e-10)
    yield _invariants("e11 generic invariants", traj)


def _sl2r(ctx: _Context):
    for coeffs, label, theory, blow in (
        ((2.0, 2.0, 1.0), "Q1", THEORY_GENERIC, 0),
        ((0.5, 4.0, 2.0), "Q2", (0.25, -0.5, 0.25), 1),
    ):
        traj = ctx.run("sl2r", "positive", coeffs)
        cls = classify_sl2r(traj)
        tag = f"sl2r {coeffs}"
        yield Check(f"{tag} label {label}", 0.0 if cls.label == label else 1.0, 0.0, detail=cls.label)
        yield Check(f"{tag} exponents", _exponent_dev(traj, theory), 0.02)
        yield Check(f"{tag} blow-up direction", 0.0 if traj.blowup_index == blow else 1.0, 0.0)
        rep = invariant_report(traj)
        yield Check(f"{tag} AB nondecreasing", rep["sl2r_AB_nondecreasing"].violation, 1e-10)
        yield _invariants(f"{tag} invariants", traj)


def _boundary(ctx: _Context):
    if ctx.fault is not None:
        # bisection drives its own integrations; under a fault the labels are meaningless
        yield Check("sl2r boundary bracket", math.nan, 1e-6, gating=False, detail="skipped under fault")
        return
    b = locate_boundary(ratio_family(2.0), 0.5, 2.0, tol=1e-6, controls=ctx.controls)
    yield Check("sl2r boundary bracket width", b.width, 1e-6, detail=f"[{b.lo:.9f}, {b.hi:.9f}]")
    yield Check("sl2r boundary endpoint labels differ", 0.0 if b.label_lo != b.label_hi else 1.0, 0.0)
    gap = b.ab_gap if b.ab_gap is not None else math.nan
    yield Check("sl2r boundary midpoint |A-B|/A", gap, 0.05)


def _scaling(ctx: _Context):
    if ctx.fault is not None:
        yield Check("scaling covariance", math.nan, 1e-6, gating=False, detail="skipped under fault")
        return
    for geometry, coeffs, direction, horizon in (
        ("su2", (2.0, 1.6, 1.25), "positive", 0.1),
        ("nil", (1.0, 2.0, 2.0), "forward", 1.0),
    ):
        for lam in (0.5, 2.0):
            dev = scaling_check(geometry, MetricState(0.0, *coeffs), lam, horizon, direction, ctx.controls)
            yield Check(f"{geometry} scaling lambda={lam}", dev, 1e-6)


def _structural(ctx: _Context):
    rng = np.random.default_rng(20240601)
    for geometry in BianchiClass:
        worst = 0.0
        for _ in range(1000):
            a, b = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=2))
            c = 4.0 / (a * b)
            for sign in (1.0, -1.0):
                ref = np.array(rhs_values(geometry, sign, 4.0, a, b, c))
                alt = np.array(curvature_rhs_values(geometry, sign, a, b, c))
                scale = max(float(np.max(np.abs(ref))), 1e-300)
                worst = max(worst, float(np.max(np.abs(ref - alt))) / scale)
        yield Check(f"{geometry.value} rhs vs curvature form", worst, 1e-12)
    for geometry, coeffs in (("su2", (4 ** (1 / 3),) * 3), ("e2", (2.0, 2.0, 1.0))):
        traj = ctx.run(geometry, "positive", coeffs, horizon=10.0)
        dev = float(np.max(np.abs(traj.coeffs / traj.coeffs[0] - 1)))
        yield Check(f"{geometry} fixed point stationary", dev, 1e-10)


SUITE = (
    _nil_closed_form,
    _e11_symmetric,
    _su2_generic,
    _su2_symmetric,
    _e2_generic,
    _e11_generic,
    _sl2r,
    _boundary,
    _scaling,
    _structural,
)


def _invariants(name: str, traj: Trajectory) -> Check:
    rep = invariant_report(traj)
    failed = rep.failures
    worst = max((c.violation - c.tolerance for c in failed), default=0.0)
    return Check(name, worst, 0.0, detail=", ".join(c.name for c in failed))


def run_suite(fault: Optional[str] = None, controls: Optional[Controls] = None,
              sections: Optional[Iterable[Callable]] = None) -> list[Check]:
    """Run every section; exceptions become failing rows rather than aborting."""
    ctx = _Context(fault, controls)
    rows: list[Check] = []
    for section in sections or SUITE:
        name = section.__name__.strip("_").replace("_", " ")
        try:
            rows.extend(section(ctx))
        except (BianchiFlowError, ValueError, KeyError, FloatingPointError) as exc:
            rows.append(Check(name, math.nan, 0.0, detail=f"{type(exc).__name__}: {exc}"))
    rows.append(Check("product drift on all runs", ctx.max_drift, 1e-9))
    return rows


def format_table(rows: list[Check]) -> str:
    width = max(len(r.name) for r in rows)
    lines = [f"{'check':<{width}}  {'worst':>12}  {'tolerance':>10}  status"]
    for r in rows:
        if r.passed:
            status = "PASS"
        elif not r.gating:
            status = "SKIP" if math.isnan(r.value) else "INFO"
        else:
            status = "FAIL"
        line = f"{r.name:<{width}}  {r.value:>12.4g}  {r.tolerance:>10.3g}  {status}"
        if r.detail and not r.passed:
            line += f"  ({r.detail})"
        lines.append(line)
    return "\n".join(lines)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bianchi_flow import (
    Controls,
    FlowSpec,
    InsufficientData,
    InvalidInput,
    SameLabel,
    Terminal,
    Trajectory,
    WrongCase,
    classify_sl2r,
    estimate_eta,
    fit_exponents,
    invariant_report,
    locate_boundary,
    ratio_family,
    subriemannian_limit,
)
from bianchi_flow.analyze import case_label, classify_initial
from bianchi_flow.flow import rhs_values
from bianchi_flow.integrate import integrate
from bianchi_flow.geometry import MetricState
from bianchi_flow.oracle import SOLITON_PREFACTOR

from conftest import run

T_PLUS = 0.5


def synthetic(exponents, prefactors, lo=1e-13, hi=1e-1, n=400, geometry="su2"):
    """Exact power laws sampled geometrically in T+ - t."""
    rest = np.geomspace(hi, lo, n)
    coeffs = np.column_stack([p * rest**e for e, p in zip(exponents, prefactors)])
    traj = Trajectory.from_arrays(FlowSpec(geometry), T_PLUS - rest, coeffs,
                                  Terminal.BLOWUP_CEILING, tail=rest - rest[-1])
    traj.t_plus_estimate, traj.remaining_at_end = T_PLUS, rest[-1]
    return traj


class TestFitExponents:
    def test_exact_law(self):
        traj = synthetic((-0.5, 0.25, 0.25), (SOLITON_PREFACTOR, 2.0, 1.5))
        fit = fit_exponents(traj)
        assert fit.exponents[0] == pytest.approx(-0.5, abs=1e-6)
        assert fit.prefactors[0] == pytest.approx(SOLITON_PREFACTOR, abs=1e-6)
        assert fit.prefactors[1:] == pytest.approx((2.0, 1.5), abs=1e-6)
        assert fit.decades >= 2
        assert all(0 <= r <= 1 for r in fit.r_squared)

    def test_explicit_t_plus(self):
        traj = synthetic((-0.5, 0.25, 0.25), (1.0, 1.0, 1.0), lo=1e-8)
        fit = fit_exponents(traj, t_plus=T_PLUS)
        assert fit.exponents[0] == pytest.approx(-0.5, abs=1e-6)

    @settings(max_examples=25)
    @given(st.floats(-2, 2), st.floats(0.01, 100))
    def test_any_exact_law(self, exponent, prefactor):
        traj = synthetic((exponent, 0.25, 0.25), (prefactor, 1.0, 1.0))
        fit = fit_exponents(traj)
        assert fit.exponents[0] == pytest.approx(exponent, abs=1e-6)
        assert fit.prefactors[0] == pytest.approx(prefactor, rel=1e-6)

    def test_too_short(self):
        traj = synthetic((-0.5, 0.25, 0.25), (1, 1, 1), lo=1e-3, hi=1e-2, n=40)
        with pytest.raises(InsufficientData):
            fit_exponents(traj)

    def test_no_blowup(self):
        with pytest.raises(InsufficientData):
            fit_exponents(run("nil", (1.0, 2.0, 2.0), "forward", 1.0))

    def test_e11_symmetric(self, e11_symmetric_traj):
        fit = fit_exponents(e11_symmetric_traj)
        assert fit.exponents == pytest.approx((-0.5, 1.0, -0.5), abs=1e-6)
        assert fit.prefactors == pytest.approx((SOLITON_PREFACTOR, 32 / 3, SOLITON_PREFACTOR), rel=1e-6)

    def test_su2_generic(self, su2_generic):
        fit = fit_exponents(su2_generic)
        assert fit.exponents == pytest.approx((-0.5, 0.25, 0.25), abs=0.02)


class TestEta:
    def test_su2(self, su2_generic):
        eta = estimate_eta(su2_generic)
        assert eta.indices == (1, 2)
        assert eta.eta1 >= eta.eta2 > 0
        assert eta.relative_width(1) < 0.02 and eta.relative_width(2) < 0.02

    def test_e2_conserved_limit(self, e2_generic):
        eta = estimate_eta(e2_generic)
        fit = fit_exponents(e2_generic)
        rest = e2_generic.time_to_blowup()
        final = (rest >= fit.window[0]) & (rest <= 10 * fit.window[0])
        ab2 = np.median((e2_generic.A * e2_generic.B**2)[final])
        assert eta.eta1**2 * SOLITON_PREFACTOR == pytest.approx(ab2, rel=0.01)

    def test_sl2r_q2_roles(self, sl2r_q2):
        assert estimate_eta(sl2r_q2).indices == (0, 2)

    def test_wrong_case(self, e11_symmetric_traj):
        with pytest.raises(WrongCase):
            estimate_eta(e11_symmetric_traj)


class TestClassify:
    def test_q1_at_start(self, sl2r_q1):
        cls = classify_sl2r(sl2r_q1)
        assert (cls.label, cls.trigger_time) == ("Q1", 0.0)

    def test_q2_at_start(self, sl2r_q2):
        cls = classify_sl2r(sl2r_q2)
        assert (cls.label, cls.trigger_time) == ("Q2", 0.0)
        assert cls.margin > 0

    def test_needs_sl2r(self, su2_generic):
        with pytest.raises(InvalidInput):
            classify_sl2r(su2_generic)

    def test_mid_run_trigger_stable_under_refinement(self):
        coarse, _ = classify_initial(1.9, 2.0, 1.05)
        fine, _ = classify_initial(1.9, 2.0, 1.05, controls=Controls().refined(0.5))
        assert coarse.label == fine.label != "Undetermined"

    def test_short_run_is_undetermined(self):
        spec = FlowSpec("sl2r")
        x = ratio_family(2.0)(1.5)
        traj = integrate(spec, MetricState(0, *x), horizon=1e-4)
        assert classify_sl2r(traj).label == "Undetermined"

    @settings(max_examples=8, deadline=None)
    @given(st.floats(0.3, 4.0), st.floats(1.0, 4.0))
    def test_absorbing_and_refinement(self, x, ratio):
        data = ratio_family(ratio)(x)
        cls, traj = classify_initial(*data)
        rep = invariant_report(traj)
        assert rep["sl2r_Q1_absorbing"].passed and rep["sl2r_Q2_absorbing"].passed
        start_margin = max(data[0] - data[1], data[1] - data[2] - data[0])
        if abs(start_margin) > 1e-6 or cls.trigger_time is not None and cls.trigger_time > 0:
            fine, _ = classify_initial(*data, controls=Controls().refined(0.5))
            assert fine.label == cls.label


class TestBoundary:
    def test_bracket(self):
        b = locate_boundary(ratio_family(2.0), 0.5, 2.0)
        assert b.width <= 1e-6
        assert {b.label_lo, b.label_hi} == {"Q1", "Q2"}
        assert 0.5 < b.lo < b.hi < 2.0
        assert b.ab_gap < 0.05

    def test_family_keeps_product(self):
        a, b, c = ratio_family(2.0)(0.7)
        assert a * b * c == pytest.approx(4.0)
        assert b == pytest.approx(2 * c)
        assert ratio_family(2.0)(2.0) == pytest.approx((2, 2, 1))

    def test_same_label(self):
        with pytest.raises(SameLabel):
            locate_boundary(ratio_family(2.0), 2.0, 3.0)


class TestLimit:
    def test_nil(self, nil_positive):
        lim = subriemannian_limit(nil_positive)
        assert lim.reference == "C"
        assert lim.surviving == ("B", "C")
        assert lim.limit_metric_coeffs == pytest.approx((2.0, 2.0), rel=1e-9)
        assert lim.diverging_monotone

    def test_su2_pair(self, su2_generic):
        lim = subriemannian_limit(su2_generic)
        eta = estimate_eta(su2_generic)
        b0 = su2_generic.B[0]
        assert lim.limit_metric_coeffs[0] == pytest.approx(b0)
        assert lim.limit_metric_coeffs[1] == pytest.approx(b0 * eta.eta2 / eta.eta1, rel=1e-6)
        assert lim.dual_coeffs[1] == pytest.approx(eta.eta1 / (eta.eta2 * b0), rel=1e-6)
        lo, hi = lim.eta_ratio_interval
        assert (hi - lo) / lim.eta_ratio < 0.01

    def test_sl2r_q2(self, sl2r_q2):
        lim = subriemannian_limit(sl2r_q2)
        assert lim.reference == "A"
        assert lim.surviving == ("A", "C")

    def test_s0_rejected(self, sl2r_q1):
        with pytest.raises(WrongCase):
            subriemannian_limit(sl2r_q1, case="S0")

    def test_two_diverging_rejected(self, e11_symmetric_traj):
        with pytest.raises(WrongCase):
            subriemannian_limit(e11_symmetric_traj)


class TestInvariants:
    def test_round_point(self):
        x = 4 ** (1 / 3)
        traj = integrate(FlowSpec("su2"), MetricState(0, x, x, x), horizon=10.0)
        rep = invariant_report(traj)
        assert rep.passed
        assert all(c.violation == 0 for c in rep.checks)
        assert "fixed_point_stationary" in rep

    def test_su2_generic(self, su2_generic):
        rep = invariant_report(su2_generic)
        assert rep.passed
        assert "su2_A_minus_B_nondecreasing" in rep

    def test_corrupted_swap(self, su2_generic):
        bad = Trajectory.from_arrays(su2_generic.spec, su2_generic.t, su2_generic.coeffs[:, [0, 2, 1]])
        rep = invariant_report(bad)
        assert not rep.passed
        assert not rep["su2_order"].passed

    def test_sign_flipped_rhs(self):
        spec = FlowSpec("su2")
        flipped = lambda A, B, C: tuple(-v for v in rhs_values(spec.geometry, 1.0, 4.0, A, B, C))
        traj = integrate(spec, MetricState(0, 2, 1.6, 1.25), horizon=1.0, rhs=flipped)
        assert not invariant_report(traj).passed

    @pytest.mark.parametrize("geometry,coeffs", [
        ("sl2r", (2.0, 2.0, 1.0)), ("sl2r", (0.5, 4.0, 2.0)), ("e2", (2.0, 1.0, 2.0)),
        ("e11", (2.0, 2.0, 1.0)), ("e11", (2.0, 1.0, 2.0)), ("nil", (1.0, 2.0, 2.0)),
        ("su2", (2.0, 2.0, 1.0)),
    ])
    def test_all_pass(self, geometry, coeffs):
        horizon = 50.0 if coeffs == (2.0, 2.0, 1.0) and geometry == "su2" else math.inf
        assert invariant_report(run(geometry, coeffs, horizon=horizon)).passed


@pytest.mark.parametrize("geometry,coeffs,expected", [
    ("su2", (2.0, 1.6, 1.25), "generic"),
    ("e11", (2.0, 1.0, 2.0), "symmetric"),
    ("sl2r", (2.0, 2.0, 1.0), "Q1"),
    ("sl2r", (0.5, 4.0, 2.0), "Q2"),
])
def test_case_label(geometry, coeffs, expected):
    assert case_label(run(geometry, coeffs)) == expected

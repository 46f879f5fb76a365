"""Adaptive integration of the normalized flow into the blow-up regime.

The state is carried in log coordinates ``(u, v, w) = (ln A, ln B, ln C)`` so
positivity is structural and the volume constraint ``u + v + w = ln p`` is a
linear invariant, which any Runge-Kutta method preserves up to rounding.

Near a finite-time singularity the independent variable is an arc-length
parameter ``sigma`` with ``dt/dsigma = 1/sqrt(1 + |du/dt|^2)``, so a blow-up
``A ~ c (T - t)^(-1/2)`` costs a bounded number of steps per decade of
``T - t`` and the integration can follow A up to ``max_coeff`` even after
``T - t`` has dropped below the resolution of ``t`` itself. Elapsed time is
accumulated with compensated summation, and every sample also stores the
exact time left until the final sample (``tail``) so downstream fits work
with ``T - t`` directly instead of differencing nearly equal floats.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .exceptions import BianchiFlowError, InsufficientData, InvalidInput
from .flow import CANONICAL_PRODUCT, Direction, FlowSpec, check_product, rhs_values
from .geometry import BianchiClass, Curvatures, MetricState, curvature_values

__all__ = [
    "Controls",
    "Canonicalization",
    "Terminal",
    "Trajectory",
    "IntegrationFailure",
    "canonicalize",
    "integrate",
    "estimate_blowup_time",
    "blowup_fit",
    "scaling_check",
]

RawRHS = Callable[[float, float, float], tuple]


class IntegrationFailure(BianchiFlowError):
    """The step budget ran out before any terminal condition was met."""


@dataclass(frozen=True)
class Controls:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_coeff: float = 1e8
    min_step: float = 1e-14
    max_samples: int = 4096
    renormalize: bool = True
    samples_per_decade: int = 32
    max_steps: int = 500_000

    def __post_init__(self):
        # below these floors double precision cannot meet the request
        if not (1e-15 <= self.rel_tol < 1 and 1e-20 <= self.abs_tol < 1):
            raise InvalidInput("need 1e-15 <= rel_tol < 1 and 1e-20 <= abs_tol < 1")
        if not self.max_coeff > 10:
            raise InvalidInput("max_coeff must exceed 10")
        if not self.min_step > 0:
            raise InvalidInput("min_step must be positive")
        if self.max_samples < 16 or self.samples_per_decade < 1:
            raise InvalidInput("sample budget too small")

    def refined(self, factor: float = 0.5) -> "Controls":
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


# ---------------------------------------------------------------------------
# canonical gauge

# Bracket-preserving relabelings and the ordering each class's analysis assumes.
_ORDER = {
    BianchiClass.SU2: "descending",
    BianchiClass.E11: "a_ge_c",
    BianchiClass.E2: "a_ge_b",
    BianchiClass.SL2R: "b_ge_c",
    BianchiClass.NIL: None,
}


@dataclass(frozen=True)
class Canonicalization:
    """``input[permutation[i]] == lam * canonical_initial[i]`` for each i."""

    geometry: BianchiClass
    lam: float
    permutation: tuple[int, int, int]
    canonical_initial: MetricState
    input_coeffs: tuple[float, float, float]

    def to_input_frame(self, t: float, coeffs: Sequence[float]) -> tuple[float, tuple[float, float, float]]:
        """Map a canonical-gauge sample to the caller's scale, time and labeling."""
        out = [0.0, 0.0, 0.0]
        for i, j in enumerate(self.permutation):
            out[j] = self.lam * coeffs[i]
        return self.lam * t, tuple(out)


def _ordering_holds(geometry: BianchiClass, A: float, B: float, C: float) -> bool:
    rule = _ORDER[geometry]
    if rule == "descending":
        return A >= B >= C
    if rule == "a_ge_c":
        return A >= C
    if rule == "a_ge_b":
        return A >= B
    if rule == "b_ge_c":
        return B >= C
    return True


def _ordering_permutation(geometry: BianchiClass, x: Sequence[float]) -> tuple[int, int, int]:
    rule = _ORDER[geometry]
    if rule == "descending":
        return tuple(sorted(range(3), key=lambda i: -x[i]))
    if rule == "a_ge_c" and x[0] < x[2]:
        return (2, 1, 0)
    if rule == "a_ge_b" and x[0] < x[1]:
        return (1, 0, 2)
    if rule == "b_ge_c" and x[1] < x[2]:
        return (0, 2, 1)
    return (0, 1, 2)


def canonicalize(geometry, A0: float, B0: float, C0: float, allow_swap: bool = True,
                 product: float = CANONICAL_PRODUCT) -> Canonicalization:
    """Rescale to ``A*B*C = product`` and relabel into the class's assumed order.

    Only relabelings that are symmetries of the class's brackets are used, so
    the printed systems stay valid. With ``allow_swap=False`` an out-of-order
    triple is rejected instead of relabeled.
    """
    geometry = BianchiClass.parse(geometry)
    x = (float(A0), float(B0), float(C0))
    if not all(math.isfinite(v) and v > 0 for v in x):
        raise InvalidInput(f"initial coefficients must be positive, got {x}")
    lam = (x[0] * x[1] * x[2] / product) ** (1.0 / 3.0)
    if allow_swap:
        perm = _ordering_permutation(geometry, x)
    else:
        if not _ordering_holds(geometry, *x):
            raise InvalidInput(f"{x} violates the {geometry.value} ordering and swaps are disabled")
        perm = (0, 1, 2)
    canon = tuple(x[j] / lam for j in perm)
    if lam == 1.0:
        canon = tuple(x[j] for j in perm)
    return Canonicalization(geometry, lam, perm, MetricState(0.0, *canon), x)


# ---------------------------------------------------------------------------
# trajectories


class Terminal(str, enum.Enum):
    REACHED_TMAX = "ReachedTmax"
    BLOWUP_CEILING = "BlowupCeiling"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass
class Trajectory:
    """Ordered samples of a flow line plus derived diagnostics.

    Arrays are aligned by sample index: ``t`` (n,), ``coeffs`` (n, 3) holding
    A, B, C, ``curvatures`` (n, 4) holding K23, K31, K12, R,
    ``product_drift`` (n,) and ``tail`` (n,), the time from each sample to the
    last one.
    """

    spec: FlowSpec
    t: np.ndarray
    coeffs: np.ndarray
    curvatures: np.ndarray
    product_drift: np.ndarray
    tail: np.ndarray
    terminal: Terminal
    t_plus_estimate: Optional[float] = None
    remaining_at_end: Optional[float] = None
    blowup_index: Optional[int] = None
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def A(self) -> np.ndarray:
        return self.coeffs[:, 0]

    @property
    def B(self) -> np.ndarray:
        return self.coeffs[:, 1]

    @property
    def C(self) -> np.ndarray:
        return self.coeffs[:, 2]

    @property
    def samples(self) -> Iterator[tuple[MetricState, Curvatures, float]]:
        for i in range(len(self.t)):
            k = self.curvatures[i]
            yield (
                MetricState(float(self.t[i]), *map(float, self.coeffs[i])),
                Curvatures(float(k[0]), float(k[1]), float(k[2])),
                float(self.product_drift[i]),
            )

    def state(self, i: int) -> MetricState:
        return MetricState(float(self.t[i]), *map(float, self.coeffs[i]))

    @property
    def final(self) -> MetricState:
        return self.state(-1)

    def time_to_blowup(self, t_plus: Optional[float] = None) -> np.ndarray:
        """``T+ - t`` at every sample, accurate even where ``t`` has no digits left."""
        if t_plus is None:
            if self.remaining_at_end is None:
                raise InsufficientData("trajectory has no blow-up time estimate")
            rest = self.remaining_at_end
        elif self.t_plus_estimate is not None and t_plus == self.t_plus_estimate:
            rest = self.remaining_at_end
        else:
            rest = t_plus - float(self.t[-1])
        return self.tail + rest

    @classmethod
    def from_arrays(cls, spec: FlowSpec, t, coeffs, terminal: Terminal = Terminal.REACHED_TMAX,
                    tail=None) -> "Trajectory":
        """Build a trajectory from externally produced samples (synthetic data, edits)."""
        t = np.asarray(t, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float).reshape(len(t), 3)
        if np.any(coeffs <= 0):
            raise InvalidInput("metric coefficients must be positive")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise InvalidInput("sample times must be strictly increasing")
        curv = np.array([_curvature_row(spec.geometry, *row) for row in coeffs]).reshape(len(t), 4)
        p0 = float(np.prod(coeffs[0]))
        drift = np.abs(np.prod(coeffs, axis=1) - p0) / p0
        tail = (t[-1] - t) if tail is None else np.asarray(tail, dtype=float)
        return cls(spec, t, coeffs, curv, drift, tail, Terminal(terminal))


def _curvature_row(geometry, A, B, C):
    k23, k31, k12 = curvature_values(geometry, A, B, C)
    return (k23, k31, k12, 2.0 * (k23 + k31 + k12))


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_MIN_SHRINK = 0.2
_MAX_GROW = 10.0


def _log_field(f: RawRHS):
    def log_rates(y):
        A, B, C = math.exp(y[0]), math.exp(y[1]), math.exp(y[2])
        dA, dB, dC = f(A, B, C)
        return dA / A, dB / B, dC / C

    def sigma_field(y):
        fu, fv, fw = log_rates(y)
        s = 1.0 / math.sqrt(1.0 + fu * fu + fv * fv + fw * fw)
        return (fu * s, fv * s, fw * s, s)

    def time_field(y):
        fu, fv, fw = log_rates(y)
        return (fu, fv, fw, 1.0)

    return log_rates, sigma_field, time_field


def _dp_step(g, y, k1, h):
    y0, y1, y2 = y

    def at(c):
        return (y0 + h * c[0], y1 + h * c[1], y2 + h * c[2])

    def comb(*terms):
        return tuple(sum(a * k[i] for a, k in terms) for i in range(4))

    k2 = g(at(comb((_A21, k1))))
    k3 = g(at(comb((_A31, k1), (_A32, k2))))
    k4 = g(at(comb((_A41, k1), (_A42, k2), (_A43, k3))))
    k5 = g(at(comb((_A51, k1), (_A52, k2), (_A53, k3), (_A54, k4))))
    k6 = g(at(comb((_A61, k1), (_A62, k2), (_A63, k3), (_A64, k4), (_A65, k5))))
    inc = comb((_B1, k1), (_B3, k3), (_B4, k4), (_B5, k5), (_B6, k6))
    y_new = (y0 + h * inc[0], y1 + h * inc[1], y2 + h * inc[2])
    dt = h * inc[3]
    k7 = g(y_new)
    err = comb((_E1, k1), (_E3, k3), (_E4, k4), (_E5, k5), (_E6, k6), (_E7, k7))
    return y_new, dt, k7, tuple(h * e for e in err)


def _error_norm(y, y_new, dt, err, rtol, atol, time_is_free):
    total = 0.0
    for i in range(3):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        total += (err[i] / sc) ** 2
    if time_is_free:
        total += (err[3] / (rtol * abs(dt) + 1e-300)) ** 2
        return math.sqrt(total / 4.0)
    return math.sqrt(total / 3.0)


class _Recorder:
    """Collects samples and the exact per-step time increments."""

    def __init__(self, geometry, product):
        self.geometry = geometry
        self.product = product
        self.t: list[float] = []
        self.y: list[tuple] = []
        self.step_index: list[int] = []
        self.blowup_flags: list[bool] = []
        self.increments: list[float] = []

    def add_step(self, dt):
        self.increments.append(dt)

    def record(self, t, y, blowup=False):
        if self.t and t <= self.t[-1]:
            # t no longer resolves the step; keep the later, larger state
            self.t[-1], self.y[-1] = self.t[-1], y
            self.step_index[-1] = len(self.increments)
            self.blowup_flags[-1] = blowup
            return
        self.t.append(t)
        self.y.append(y)
        self.step_index.append(len(self.increments))
        self.blowup_flags.append(blowup)

    def thin(self, budget):
        n = len(self.t)
        if n <= budget:
            return
        regular = [i for i in range(1, n - 1) if not self.blowup_flags[i]]
        excess = n - budget
        if excess >= len(regular):
            drop = set(regular)
        else:
            stride = len(regular) / excess
            drop = {regular[int(k * stride)] for k in range(excess)}
        keep = [i for i in range(n) if i not in drop]
        for name in ("t", "y", "step_index", "blowup_flags"):
            seq = getattr(self, name)
            setattr(self, name, [seq[i] for i in keep])

    def build(self, spec, terminal, stats) -> Trajectory:
        coeffs = np.exp(np.array(self.y, dtype=float))
        incr = np.array(self.increments, dtype=float)
        # suffix sums from the small end keep relative accuracy near T+
        suffix = np.concatenate([np.cumsum(incr[::-1])[::-1], [0.0]])
        tail = suffix[np.array(self.step_index, dtype=int)]
        tail = tail - tail[-1]
        curv = np.array([_curvature_row(self.geometry, *row) for row in coeffs])
        # drift is measured from the initial sample, whose own offset from the
        # nominal product is bounded by the guard in check_product
        prod = coeffs[:, 0] * coeffs[:, 1] * coeffs[:, 2]
        drift = np.abs(prod - prod[0]) / prod[0]
        return Trajectory(spec, np.array(self.t), coeffs, curv, drift, tail, terminal, stats=stats)


def _project(y, log_p):
    excess = (y[0] + y[1] + y[2] - log_p) / 3.0
    return (y[0] - excess, y[1] - excess, y[2] - excess)


def integrate(spec: FlowSpec, s0: MetricState, controls: Optional[Controls] = None,
              horizon: float = math.inf, t_eval: Optional[Sequence[float]] = None,
              rhs: Optional[RawRHS] = None) -> Trajectory:
    """Integrate ``spec`` from ``s0`` until the horizon, the blow-up ceiling, or step underflow.

    Args:
        spec: flow class, direction and volume constant.
        s0: initial state; ``A*B*C`` must equal ``spec.product`` to 1e-6.
        controls: tolerances, ceiling and sampling budget.
        horizon: final time (relative to ``s0.t``); may be infinite when a
            blow-up is expected.
        t_eval: extra times at which the integrator lands exactly and records
            a sample.
        rhs: replacement right-hand side ``f(A, B, C) -> (dA, dB, dC)``; used
            by fault-injection checks.

    Returns:
        Trajectory with blow-up time estimate attached when the ceiling was hit.
    """
    c = controls or Controls()
    check_product(spec, s0)
    if not horizon > 0:
        raise InvalidInput("horizon must be positive")
    geometry, sign, product = spec.geometry, spec.direction.sign, spec.product
    f = rhs or (lambda A, B, C: rhs_values(geometry, sign, product, A, B, C))
    log_rates, sigma_field, time_field = _log_field(f)

    t0 = s0.t
    targets = sorted({float(x) for x in (() if t_eval is None else t_eval) if 0 < x - t0 < horizon})
    if math.isfinite(horizon):
        targets.append(t0 + horizon)
    spacing = horizon / (c.max_samples // 2) if math.isfinite(horizon) else 0.0
    decade_ratio = 10.0 ** (-1.0 / c.samples_per_decade)
    blowup_h_max = math.log(10.0) / (2.0 * c.samples_per_decade)
    y = (math.log(s0.A), math.log(s0.B), math.log(s0.C))
    # project onto the initial volume, not the nominal one, so exact data stay exact
    log_p = y[0] + y[1] + y[2]
    t, t_comp = t0, 0.0
    rec = _Recorder(geometry, product)
    rec.record(t, y)
    next_grid = t0 + spacing
    last_sample_rest = math.inf

    rates = log_rates(y)
    h = 0.01 / max(1.0, max(abs(r) for r in rates))
    err_old = 1e-4
    mode = "sigma"
    k1 = sigma_field(y)
    steps = rejected = 0
    terminal = None
    in_blowup = False

    while terminal is None:
        if steps + rejected > c.max_steps:
            raise IntegrationFailure(f"step budget of {c.max_steps} exhausted at t={t!r}")
        target = targets[0] if targets else math.inf
        if mode == "sigma" and target - t <= 2.0 * h * k1[3]:
            mode = "time"
            h_time = target - t
            k1 = time_field(y)
        if mode == "time":
            h_try = min(h_time, target - t)
            g = time_field
        else:
            h_try = min(h, blowup_h_max) if in_blowup else h
            g = sigma_field

        y_new, dt, k7, err = _dp_step(g, y, k1, h_try)
        e = _error_norm(y, y_new, dt, err, c.rel_tol, c.abs_tol, mode == "sigma")
        if not math.isfinite(e):
            e = 1e10

        if e > 1.0:
            rejected += 1
            shrink = min(1.0 / _MIN_SHRINK, (e ** _ALPHA) / _SAFETY)
            if mode == "time":
                h_time = h_try / shrink
                if h_time < c.min_step:
                    terminal = Terminal.STEP_UNDERFLOW
            else:
                h = h_try / shrink
                if h < c.min_step:
                    terminal = Terminal.STEP_UNDERFLOW
            continue

        steps += 1
        if c.renormalize:
            y_new = _project(y_new, log_p)
        landed = mode == "time" and h_try == target - t
        if landed:
            rec.add_step(target - t)
            t, t_comp = target, 0.0
            targets.pop(0)
        else:
            rec.add_step(dt)
            corrected = dt - t_comp
            t_next = t + corrected
            t_comp = (t_next - t) - corrected
            t = t_next
        y = y_new

        fac = (e ** _ALPHA) * (err_old ** -_BETA) / _SAFETY
        fac = min(1.0 / _MIN_SHRINK, max(1.0 / _MAX_GROW, fac))
        err_old = max(e, 1e-4)
        if mode == "time":
            h_time = h_try / fac
        else:
            h = h_try / fac
        k1 = k7

        rates = log_rates(y)
        fastest = max(rates)
        rest = 1.0 / (2.0 * fastest) if fastest > 0 else math.inf
        in_blowup = rest < 0.25 * (t - t0 + rest)
        biggest = math.exp(max(y))

        if landed:
            rec.record(t, y, in_blowup)
            mode = "sigma"
            k1 = sigma_field(y)
            if math.isfinite(horizon) and t >= t0 + horizon:
                terminal = Terminal.REACHED_TMAX
                break
        elif biggest > c.max_coeff:
            rec.record(t, y, True)
            terminal = Terminal.BLOWUP_CEILING
            break
        elif in_blowup:
            if rest <= last_sample_rest * decade_ratio:
                rec.record(t, y, True)
                # advance along the grid, not to the sample, so overshoot does not accumulate
                if math.isinf(last_sample_rest):
                    last_sample_rest = rest
                else:
                    while last_sample_rest * decade_ratio >= rest:
                        last_sample_rest *= decade_ratio
        elif t >= next_grid:
            rec.record(t, y)
            next_grid = t + spacing
        if h < c.min_step and mode == "sigma":
            rec.record(t, y, in_blowup)
            terminal = Terminal.STEP_UNDERFLOW

    if rec.step_index[-1] != len(rec.increments):
        rec.record(t, y, in_blowup)
    rec.thin(c.max_samples)
    traj = rec.build(spec, terminal, {"accepted": steps, "rejected": rejected})
    if terminal is Terminal.BLOWUP_CEILING:
        try:
            t_plus, rest_end, index = blowup_fit(traj)
        except InsufficientData:
            pass
        else:
            traj.t_plus_estimate, traj.remaining_at_end, traj.blowup_index = t_plus, rest_end, index
    return traj


# ---------------------------------------------------------------------------
# blow-up time


def _linear_fit(x, y):
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise InsufficientData("degenerate abscissa in linear fit")
    slope = float(dx @ dy) / sxx
    return slope, ym - slope * xm


def blowup_fit(traj: Trajectory, min_points: int = 10) -> tuple[float, float, int]:
    """Extrapolate ``X^-2`` linearly to zero over the final decade (two if sparse).

    ``X`` is the coefficient that is largest at the last sample. Returns
    ``(t_plus, remaining_after_last_sample, index_of_X)``.
    """
    if traj.terminal is not Terminal.BLOWUP_CEILING:
        raise InsufficientData(f"trajectory ended with {traj.terminal.value}, not a blow-up")
    index = int(np.argmax(traj.coeffs[-1]))
    inv_sq = traj.coeffs[:, index] ** -2.0
    window = inv_sq <= 10.0 * inv_sq[-1]
    if window.sum() < min_points:
        # last steps can stretch once T+ - t nears the spacing of t itself
        window = inv_sq <= 100.0 * inv_sq[-1]
    if window.sum() < min_points:
        raise InsufficientData(f"only {int(window.sum())} samples in the final decade")
    s = -traj.tail[window]
    y = inv_sq[window]
    # rescale so the fit is O(1) regardless of how close to T+ the window is
    s_scale, y_scale = float(np.max(np.abs(s))) or 1.0, float(np.max(y))
    xs, ys = s / s_scale, y / y_scale
    slope, icpt = _linear_fit(xs, ys)
    resid = ys - (icpt + slope * xs)
    sigma = float(resid.std())
    if sigma > 0:
        keep = np.abs(resid) <= 3.0 * sigma
        if keep.sum() >= 3 and not keep.all():
            slope, icpt = _linear_fit(xs[keep], ys[keep])
    if slope >= 0:
        raise InsufficientData("X^-2 is not decreasing over the final decade")
    remaining = -icpt / slope * s_scale
    return float(traj.t[-1]) + remaining, remaining, index


def estimate_blowup_time(traj: Trajectory) -> float:
    return blowup_fit(traj)[0]


# ---------------------------------------------------------------------------
# scaling covariance


def scaling_check(geometry, s0: MetricState, lam: float, horizon: float,
                  direction=Direction.POSITIVE, controls: Optional[Controls] = None,
                  n_points: int = 50) -> float:
    """Max relative deviation between ``X_lam(lam t)`` and ``lam * X(t)``.

    ``X`` is integrated from ``s0`` over ``(0, horizon]`` and ``X_lam`` from
    ``lam * s0`` with volume constant ``lam^3 * A0 B0 C0`` over
    ``(0, lam * horizon]``; both runs land exactly on the matched times.
    """
    geometry = BianchiClass.parse(geometry)
    if not 0.1 <= lam <= 10:
        raise InvalidInput("scale factor must lie in [0.1, 10]")
    direction = Direction.parse(direction)
    base_spec = FlowSpec(geometry, direction, s0.A * s0.B * s0.C)
    scaled_spec = FlowSpec(geometry, direction, base_spec.product * lam**3)
    base_times = [horizon * (k + 1) / n_points for k in range(n_points)]
    scaled_times = [lam * t for t in base_times]
    base = integrate(base_spec, MetricState(0.0, s0.A, s0.B, s0.C), controls,
                     horizon=base_times[-1], t_eval=base_times)
    scaled0 = MetricState(0.0, lam * s0.A, lam * s0.B, lam * s0.C)
    scaled = integrate(scaled_spec, scaled0, controls, horizon=scaled_times[-1], t_eval=scaled_times)
    worst = 0.0
    for tb, ts in zip(base_times, scaled_times):
        i = int(np.searchsorted(scaled.t, ts))
        j = int(np.searchsorted(base.t, tb))
        if i >= len(scaled.t) or j >= len(base.t) or scaled.t[i] != ts or base.t[j] != tb:
            raise BianchiFlowError("integrator failed to land on a comparison time")
        expected = lam * base.coeffs[j]
        worst = max(worst, float(np.max(np.abs(scaled.coeffs[i] - expected) / expected)))
    return worst

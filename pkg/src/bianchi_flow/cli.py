"""Command-line front end: ``simulate``, ``verify``, ``classify`` and ``sweep``.

Every command reads its options from flags, optionally seeded by a flat JSON
config file (``--config``); explicit flags win. Outputs are plain CSV and
JSON in the canonical gauge (``A0*B0*C0 = 4`` after any allowed relabeling).

Exit codes: 0 success, 1 verify failure, 2 invalid input, 3 integration failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .analyze import (
    COEFF_NAMES,
    BlowupReport,
    analyze_trajectory,
    classify_sl2r,
    locate_boundary,
    ratio_family,
)
from .exceptions import BianchiFlowError, InvalidInput, SameLabel, WrongCase
from .flow import CANONICAL_PRODUCT, Direction, FlowSpec
from .geometry import BianchiClass
from .integrate import Canonicalization, Controls, IntegrationFailure, Trajectory, canonicalize, integrate
from .verify import FAULTS, format_table, run_suite

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_INTEGRATION = 0, 1, 2, 3
CSV_COLUMNS = ("t", "A", "B", "C", "K23", "K31", "K12", "R", "product_drift")
DEFAULT_HORIZON = {Direction.POSITIVE: 1000.0, Direction.FORWARD: 10.0}

# config keys accepted from --config; dashes and underscores are equivalent
_CONFIG_KEYS = {
    "class", "direction", "initial", "horizon", "rel_tol", "abs_tol", "max_coeff",
    "out", "summary", "grid", "bisect", "no_swap", "workers", "ratio",
}


@dataclass
class RunConfig:
    """Resolved options for one invocation."""

    mode: str
    geometry: Optional[BianchiClass] = None
    direction: Direction = Direction.POSITIVE
    initial: Optional[tuple[float, float, float]] = None
    horizon: Optional[float] = None
    controls: Controls = field(default_factory=Controls)
    out: Optional[str] = None
    summary: Optional[str] = None
    grid: Optional[str] = None
    bisect: Optional[str] = None
    allow_swap: bool = True
    workers: int = 1
    ratio: float = 2.0
    fault: Optional[str] = None

    def resolved_horizon(self) -> float:
        return self.horizon if self.horizon is not None else DEFAULT_HORIZON[self.direction]


# ---------------------------------------------------------------------------
# parsing helpers


def parse_triple(text: Any) -> tuple[float, float, float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise InvalidInput(f"cannot parse initial data {text!r}; expected a,b,c") from None
    if len(values) != 3:
        raise InvalidInput(f"expected three coefficients, got {len(values)}")
    return values


def _parse_range(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InvalidInput(f"range {text!r} must look like lo:hi:n") from None
    if n < 1 or lo <= 0 or hi <= 0:
        raise InvalidInput(f"range {text!r} needs positive bounds and n >= 1")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def parse_grid(text: str, ratio: float = 2.0) -> list[tuple[float, float, float]]:
    """Expand a grid spec into initial triples with ``A*B*C = 4``.

    ``A=lo:hi:n,B=lo:hi:n`` varies two coefficients and solves for the third;
    ``x=lo:hi:n`` walks the family ``x -> (x, ratio*c, c)``.
    """
    axes: dict[str, np.ndarray] = {}
    for item in text.split(","):
        key, _, rng = item.partition("=")
        key = key.strip()
        if key not in ("A", "B", "C", "x") or not rng:
            raise InvalidInput(f"bad grid axis {item!r}")
        if key in axes:
            raise InvalidInput(f"grid axis {key} given twice")
        axes[key] = _parse_range(rng)
    if "x" in axes:
        if len(axes) != 1:
            raise InvalidInput("the x family axis cannot be combined with coefficient axes")
        family = ratio_family(ratio)
        return [family(float(x)) for x in axes["x"]]
    if len(axes) != 2:
        raise InvalidInput("a coefficient grid needs exactly two of A, B, C")
    (k1, v1), (k2, v2) = axes.items()
    missing = ({"A", "B", "C"} - {k1, k2}).pop()
    points = []
    for a in v1:
        for b in v2:
            known = {k1: float(a), k2: float(b)}
            derived = CANONICAL_PRODUCT / (known[k1] * known[k2])
            # snap rounding noise so symmetric grid points stay exactly symmetric
            for v in (known[k1], known[k2]):
                if abs(derived - v) <= 4 * math.ulp(v):
                    derived = v
            known[missing] = derived
            points.append((known["A"], known["B"], known["C"]))
    return points


def parse_bisect(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise InvalidInput(f"bisection spec {text!r} must look like lo:hi[:ratio]") from None
    if len(values) == 2:
        values.append(2.0)
    if len(values) != 3:
        raise InvalidInput(f"bisection spec {text!r} must look like lo:hi[:ratio]")
    return values[0], values[1], values[2]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# output


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for i in range(len(traj)):
        row = (traj.t[i], *traj.coeffs[i], *traj.curvatures[i], traj.product_drift[i])
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _interval(value: float, lo: float, hi: float) -> dict:
    return {"value": value, "interval": [lo, hi]}


def build_summary(cfg: RunConfig, canon: Canonicalization, traj: Trajectory,
                  report: BlowupReport) -> dict:
    """Versioned summary; fields that do not apply are omitted."""
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "class": canon.geometry.value,
        "direction": cfg.direction.value,
        "initial": list(canon.input_coeffs),
        "canonical_initial": list(canon.canonical_initial.coeffs),
        "lambda": canon.lam,
        "permutation": list(canon.permutation),
        "gauge": "canonical",
        "case": report.case,
        "terminal": traj.terminal.value,
        "t_final": float(traj.t[-1]),
        "tolerances": {"rel_tol": cfg.controls.rel_tol, "abs_tol": cfg.controls.abs_tol},
    }
    if report.t_plus is not None:
        out["t_plus"] = {
            "value": report.t_plus,
            "lower_bound": float(traj.t[-1]),
            "extrapolated": traj.remaining_at_end,
        }
    if report.fit is not None:
        fit = report.fit
        out["exponents"] = {
            n: {"value": e, "stderr": s, "r_squared": r}
            for n, e, s, r in zip(COEFF_NAMES, fit.exponents, fit.stderr, fit.r_squared)
        }
        out["prefactors"] = {n: {"value": p} for n, p in zip(COEFF_NAMES, fit.prefactors)}
        out["fit_window"] = list(fit.window)
    if report.eta is not None:
        eta = report.eta
        out["eta"] = {
            "eta1": _interval(eta.eta1, *eta.interval1),
            "eta2": _interval(eta.eta2, *eta.interval2),
            "coefficients": [COEFF_NAMES[i] for i in eta.indices],
        }
    if report.sl2r is not None:
        out["sl2r_label"] = report.sl2r.label
        out["sl2r_margin"] = report.sl2r.margin
        if report.sl2r.trigger_time is not None:
            out["sl2r_trigger_time"] = report.sl2r.trigger_time
    if report.limit is not None:
        lim = report.limit
        out["limit"] = {
            "reference": lim.reference,
            "surviving": list(lim.surviving),
            "coeffs": [_interval(c, *iv) for c, iv in zip(lim.limit_metric_coeffs, lim.coeff_intervals)],
            "dual": list(lim.dual_coeffs),
            "eta_ratio": _interval(lim.eta_ratio, *lim.eta_ratio_interval),
        }
    if report.invariants is not None:
        out["invariants"] = {
            "passed": report.invariants.passed,
            "failures": [c.name for c in report.invariants.failures],
        }
    if report.notes:
        out["notes"] = list(report.notes)
    return out


def _verdict(summary: dict) -> str:
    parts = [summary["class"], summary["direction"], f"case={summary['case']}",
             f"terminal={summary['terminal']}"]
    if "t_plus" in summary:
        parts.append(f"T+={summary['t_plus']['value']:.12g}")
    if "exponents" in summary:
        exps = ", ".join(f"{summary['exponents'][n]['value']:+.4f}" for n in COEFF_NAMES)
        parts.append(f"exponents=({exps})")
    if "sl2r_label" in summary:
        parts.append(f"label={summary['sl2r_label']}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# commands


def _simulate_one(cfg: RunConfig, coeffs) -> tuple[Canonicalization, Trajectory, BlowupReport]:
    canon = canonicalize(cfg.geometry, *coeffs, allow_swap=cfg.allow_swap)
    spec = FlowSpec(canon.geometry, cfg.direction)
    traj = integrate(spec, canon.canonical_initial, cfg.controls, horizon=cfg.resolved_horizon())
    return canon, traj, analyze_trajectory(traj)


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.geometry is None or cfg.initial is None:
        raise InvalidInput("simulate needs --class and --initial")
    canon, traj, report = _simulate_one(cfg, cfg.initial)
    summary = build_summary(cfg, canon, traj, report)
    _write(cfg.out, trajectory_csv(traj))
    _write(cfg.summary, json.dumps(summary, indent=2, allow_nan=False) + "\n")
    print(_verdict(summary), file=sys.stderr)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    rows = run_suite(fault=cfg.fault, controls=cfg.controls)
    print(format_table(rows))
    failed = [r for r in rows if r.gating and not r.passed]
    if failed:
        print(f"verify: {len(failed)} check(s) failed: " + "; ".join(r.name for r in failed))
        return EXIT_VERIFY
    print(f"verify: all {sum(r.gating for r in rows)} gating checks passed")
    return EXIT_OK


def _classify_point(task) -> dict:
    coeffs, allow_swap, controls = task
    row = {"A0": coeffs[0], "B0": coeffs[1], "C0": coeffs[2]}
    try:
        canon = canonicalize(BianchiClass.SL2R, *coeffs, allow_swap=allow_swap)
        traj = integrate(FlowSpec(BianchiClass.SL2R, Direction.POSITIVE), canon.canonical_initial, controls)
        cls = classify_sl2r(traj)
    except InvalidInput as exc:
        row.update(label="invalid", error=str(exc))
        return row
    except IntegrationFailure as exc:
        row.update(label="failed", error=str(exc))
        return row
    row.update(label=cls.label, trigger_time=cls.trigger_time, margin=cls.margin)
    return row


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so output is independent of scheduling
        return list(pool.map(fn, tasks))


def _label_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("A0,B0,C0,label,trigger_time,margin\n")
    for r in rows:
        trig = "" if r.get("trigger_time") is None else _fmt(r["trigger_time"])
        margin = "" if r.get("margin") is None else _fmt(r["margin"])
        buf.write(f"{_fmt(r['A0'])},{_fmt(r['B0'])},{_fmt(r['C0'])},{r['label']},{trig},{margin}\n")
    return buf.getvalue()


def cmd_classify(cfg: RunConfig) -> int:
    if cfg.geometry not in (None, BianchiClass.SL2R):
        raise InvalidInput("classify applies to --class sl2r only")
    chosen = [x is not None for x in (cfg.initial, cfg.grid, cfg.bisect)]
    if sum(chosen) != 1:
        raise InvalidInput("classify needs exactly one of --initial, --grid, --bisect")
    if cfg.bisect is not None:
        lo, hi, ratio = parse_bisect(cfg.bisect)
        try:
            b = locate_boundary(ratio_family(ratio), lo, hi, controls=cfg.controls)
        except (SameLabel, WrongCase) as exc:
            raise InvalidInput(str(exc)) from exc
        result = {
            "schema_version": SCHEMA_VERSION,
            "family": {"ratio": ratio},
            "bracket": [b.lo, b.hi],
            "labels": [b.label_lo, b.label_hi],
            "width": b.width,
            "midpoint": b.midpoint,
            "midpoint_label": b.midpoint_label,
            "probes": b.probes,
        }
        if b.c_exponent is not None:
            result["midpoint_c_exponent"] = b.c_exponent
        if b.ab_gap is not None:
            result["midpoint_ab_gap"] = b.ab_gap
        text = json.dumps(result, indent=2, allow_nan=False) + "\n"
        _write(cfg.summary or cfg.out, text)
        print(f"boundary in [{b.lo:.10g}, {b.hi:.10g}] ({b.label_lo} -> {b.label_hi}), width {b.width:.3g}", file=sys.stderr)
        return EXIT_OK
    points = [cfg.initial] if cfg.initial is not None else parse_grid(cfg.grid, cfg.ratio)
    tasks = [(p, cfg.allow_swap, cfg.controls) for p in points]
    rows = _map(_classify_point, tasks, cfg.workers)
    if cfg.initial is not None:
        row = rows[0]
        if row["label"] == "invalid":
            raise InvalidInput(row["error"])
        if row["label"] == "failed":
            raise IntegrationFailure(row["error"])
    text = _label_csv(rows)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        _write(cfg.out, text)
        for r in rows:
            print(f"({r['A0']:.6g}, {r['B0']:.6g}, {r['C0']:.6g}) -> {r['label']}")
    return EXIT_OK


SWEEP_COLUMNS = (
    "index", "A0", "B0", "C0", "case", "terminal", "t_plus",
    "exp_A", "exp_B", "exp_C", "eta1", "eta2", "sl2r_label", "status", "error",
)


def _sweep_point(task) -> dict:
    index, cfg, coeffs = task
    row: dict[str, Any] = {"index": index, "A0": coeffs[0], "B0": coeffs[1], "C0": coeffs[2]}
    try:
        _, traj, report = _simulate_one(cfg, coeffs)
    except (InvalidInput, IntegrationFailure) as exc:
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return row
    case = "fixed-point" if report.case == "fixed" else report.case
    row.update(case=case, terminal=traj.terminal.value, status="ok")
    if report.t_plus is not None:
        row["t_plus"] = report.t_plus
    if report.fit is not None and case != "fixed-point":
        row.update(exp_A=report.fit.exponents[0], exp_B=report.fit.exponents[1],
                   exp_C=report.fit.exponents[2])
    if report.eta is not None:
        row.update(eta1=report.eta.eta1, eta2=report.eta.eta2)
    if report.sl2r is not None:
        row["sl2r_label"] = report.sl2r.label
    return row


def _sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in rows:
        cells = []
        for col in SWEEP_COLUMNS:
            v = r.get(col)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(_fmt(v))
            else:
                cells.append(str(v).replace(",", ";"))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.geometry is None or cfg.grid is None:
        raise InvalidInput("sweep needs --class and --grid")
    points = parse_grid(cfg.grid, cfg.ratio)
    rows = _map(_sweep_point, [(i, cfg, p) for i, p in enumerate(points)], cfg.workers)
    text = _sweep_csv(rows)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        _write(cfg.out, text)
    ok = sum(r["status"] == "ok" for r in rows)
    print(f"sweep: {ok}/{len(rows)} points ok", file=sys.stderr)
    return EXIT_OK if ok else EXIT_INTEGRATION


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults are None so config-file values can fill in what flags leave unset
    p.add_argument("--class", dest="class_", choices=[c.value for c in BianchiClass], default=None,
                   help="Bianchi class")
    p.add_argument("--direction", choices=[d.value for d in Direction], default=None,
                   help="forward normalized flow or its time reversal (default: positive)")
    p.add_argument("--initial", default=None, help="initial coefficients a,b,c")
    p.add_argument("--horizon", type=float, default=None,
                   help="final time (default 1000 positive, 10 forward)")
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--abs-tol", type=float, default=None)
    p.add_argument("--max-coeff", type=float, default=None, help="blow-up ceiling (default 1e8)")
    p.add_argument("--out", default=None, help="CSV output path ('-' for stdout)")
    p.add_argument("--summary", default=None, help="JSON summary path ('-' for stdout)")
    p.add_argument("--config", default=None, help="flat JSON file of option defaults")
    p.add_argument("--grid", default=None, help="A=lo:hi:n,B=lo:hi:n or x=lo:hi:n")
    p.add_argument("--bisect", default=None, help="lo:hi[:ratio] on the x family")
    p.add_argument("--ratio", type=float, default=None, help="B/C ratio of the x family (default 2)")
    p.add_argument("--no-swap", action="store_true", default=None,
                   help="reject out-of-order data instead of relabeling it")
    p.add_argument("--workers", type=int, default=None, help="worker processes for grids")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bianchi-flow",
        description="Normalized Ricci flow on Bianchi-class homogeneous 3-geometries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate one initial condition and analyze the result",
        "verify": "run the oracle and invariant suite",
        "classify": "label SL(2,R) data as Q1/Q2 (point, grid or bisection)",
        "sweep": "simulate every point of a grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _add_common(p)
        if name == "verify":
            p.add_argument("--inject-fault", choices=sorted(FAULTS), default=None, help=argparse.SUPPRESS)
    return parser


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidInput("config must be a flat JSON object")
    out = {}
    for key, value in data.items():
        norm = key.replace("-", "_")
        if norm not in _CONFIG_KEYS:
            raise InvalidInput(f"unknown config key {key!r}")
        if isinstance(value, dict):
            raise InvalidInput(f"config key {key!r} must not be nested")
        out[norm] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over config-file values over built-in defaults."""
    file_cfg = _load_config(args.config)
    flags = {
        "class": args.class_, "direction": args.direction, "initial": args.initial,
        "horizon": args.horizon, "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
        "max_coeff": args.max_coeff, "out": args.out, "summary": args.summary,
        "grid": args.grid, "bisect": args.bisect, "no_swap": args.no_swap,
        "workers": args.workers, "ratio": args.ratio,
    }
    merged = {k: (v if v is not None else file_cfg.get(k)) for k, v in flags.items()}

    ctrl = {}
    for key in ("rel_tol", "abs_tol", "max_coeff"):
        if merged[key] is not None:
            ctrl[key] = float(merged[key])
    try:
        controls = Controls(**ctrl)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    horizon = merged["horizon"]
    if horizon is not None:
        horizon = float(horizon)
        if not horizon > 0:
            raise InvalidInput("--horizon must be positive")
    workers = int(merged["workers"] or 1)
    if workers < 1:
        raise InvalidInput("--workers must be >= 1")
    return RunConfig(
        mode=args.command,
        geometry=BianchiClass.parse(merged["class"]) if merged["class"] else None,
        direction=Direction.parse(merged["direction"] or "positive"),
        initial=parse_triple(merged["initial"]) if merged["initial"] is not None else None,
        horizon=horizon,
        controls=controls,
        out=merged["out"],
        summary=merged["summary"],
        grid=merged["grid"],
        bisect=merged["bisect"],
        allow_swap=not bool(merged["no_swap"]),
        workers=workers,
        ratio=float(merged["ratio"]) if merged["ratio"] is not None else 2.0,
        fault=getattr(args, "inject_fault", None),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.mode](cfg)
    except IntegrationFailure as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (InvalidInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BianchiFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

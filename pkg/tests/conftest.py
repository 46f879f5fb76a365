import functools

import pytest

from bianchi_flow import Controls, FlowSpec, MetricState, integrate


@functools.lru_cache(maxsize=None)
def run(geometry, coeffs, direction="positive", horizon=float("inf"), rel_tol=1e-11):
    """Integrate once per session; trajectories are treated as read-only."""
    spec = FlowSpec(geometry, direction, coeffs[0] * coeffs[1] * coeffs[2])
    return integrate(spec, MetricState(0.0, *coeffs), Controls(rel_tol=rel_tol), horizon=horizon)


@pytest.fixture(scope="session")
def su2_generic():
    return run("su2", (2.0, 1.6, 1.25))


@pytest.fixture(scope="session")
def e11_symmetric_traj():
    return run("e11", (2.0, 1.0, 2.0))


@pytest.fixture(scope="session")
def e2_generic():
    return run("e2", (2.0, 1.0, 2.0))


@pytest.fixture(scope="session")
def sl2r_q1():
    return run("sl2r", (2.0, 2.0, 1.0))


@pytest.fixture(scope="session")
def sl2r_q2():
    return run("sl2r", (0.5, 4.0, 2.0))


@pytest.fixture(scope="session")
def nil_positive():
    return run("nil", (1.0, 2.0, 2.0))


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion in the terminal summary

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record ``(label, value, tolerance)`` checks for one criterion, then assert them."""

    def record(number, title, checks):
        failed = [(label, v, tol) for label, v, tol in checks if not (v <= tol)]
        status = "PASS" if not failed else "FAIL"
        parts = "; ".join(f"{label}={v:.3g} (tol {tol:g})" for label, v, tol in checks)
        line = f"criterion {number:>2} {status}  {title}: {parts}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert not failed, "failed: " + ", ".join(label for label, _, _ in failed)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

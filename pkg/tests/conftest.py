import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_tuple(rng, n, scale=1.0):
    return tuple(complex(a, b) for a, b in scale * rng.normal(size=(n, 2)))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion; printed again in the terminal summary."""

    def record(label, residual, tol, detail=""):
        ok = bool(residual <= tol)
        line = f"{label} {'PASS' if ok else 'FAIL'}  residual={residual:.3e}  tol={tol:.0e}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

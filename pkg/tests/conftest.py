import numpy as np
import pytest

from boundary_vol.excursion import MCConfig
from boundary_vol.psi import calibrate_psi_ppp, default_grid


@pytest.fixture(scope="session")
def ppp_table():
    """Point-process table at K = 31.6 on sigma^2 in [0.02, 50]."""
    return calibrate_psi_ppp(31.6, default_grid(0.02, 50.0, 20), MCConfig(replications=20000, time_grid=1000, seed=11))


def joint_z(a, b):
    """Standardised difference of two independent MC estimates."""
    return (a.value - b.value) / np.hypot(a.std_error, b.std_error)


ACCEPTANCE_LINES = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Store and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

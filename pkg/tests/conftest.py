import sys

import numpy as np
import pytest

from thermal_hartree.scf import SCFConfig, zero_temperature_solve

# coarse box for unit tests; the acceptance suite uses the defaults
SMALL = SCFConfig(r_max=40.0, n_points=800)


@pytest.fixture(scope="session")
def small_config():
    return SMALL


@pytest.fixture(scope="session")
def zero_small():
    return zero_temperature_solve(1.0, SMALL)


@pytest.fixture(scope="session")
def tc_small(zero_small):
    levels = zero_small.diagnostics["levels"]
    return float(levels[1] - levels[0]) / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    # the collected module, whatever name pytest imported it under
    report = {}
    for name, module in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            report.update(getattr(module, "REPORT", {}))
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report):
        terminalreporter.write_line(report[key])

import sys

import pytest

from cspdc_g2.core import identical_detectors

# every detector eta=0.7, d=20/s; W=5 ns; P=1e-6
IDENTICAL = dict(eta=0.7, dark_rate=20.0, window=5e-9, cascade_efficiency=1e-6)
# heralds eta=0.7, d=10/s; ideal A/B; W=2 ns; P=1e-6
IDEAL_G2 = dict(eta=0.7, dark_rate=10.0, window=2e-9, cascade_efficiency=1e-6, g2_dark_rate=0.0)


@pytest.fixture
def identical_cspdc():
    return identical_detectors(**IDENTICAL)


@pytest.fixture
def identical_spdc(identical_cspdc):
    return identical_cspdc.as_spdc()


@pytest.fixture
def ideal_g2_cspdc():
    return identical_detectors(**IDEAL_G2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None:
        return
    lines = mod.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

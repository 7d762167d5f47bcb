import sys

import pytest

from randlase.medium import CloudGeometry, Medium
from randlase.spectral import SpectralModel


@pytest.fixture
def passive_sphere():
    return Medium(CloudGeometry(radius=5.0)), SpectralModel()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

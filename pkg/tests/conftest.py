import numpy as np
import pytest

from quenchqns.bath import SpectralModel


@pytest.fixture
def ohmic():
    return SpectralModel(1.0, 0.1, 1.0, "gaussian")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)

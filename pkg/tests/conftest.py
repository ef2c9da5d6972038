import math

import numpy as np
import pytest

from measengine.linalg import diag
from measengine.states import HeatBath, gibbs_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qubit():
    """H = diag(0, 1) at T = 1/ln 2, so that beta*eps = ln 2 and rho = diag(2/3, 1/3)."""
    bath = HeatBath(1.0 / math.log(2.0))
    h = diag(0.0, 1.0)
    return h, bath, gibbs_state(h, bath)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

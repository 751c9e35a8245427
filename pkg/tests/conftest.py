import numpy as np
import pytest
from hypothesis import settings

from conesmith import complexes as C
from conesmith import cones as K

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

CORRECTED = K.ConeParams(27, 3, np.exp(-20), np.exp(7), (13, 13))


@pytest.fixture(scope="session")
def pentagon():
    return C.suspension(C.circle_complex(5))


@pytest.fixture(scope="session")
def params():
    return CORRECTED


@pytest.fixture(scope="session")
def smoothed(pentagon, params):
    from conesmith.smoothing import smooth_cone
    return smooth_cone(pentagon, params)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)

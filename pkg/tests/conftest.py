import numpy as np
import pytest

from charpca.simulate import RngStream


@pytest.fixture
def rng():
    return RngStream(1234, 0)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)

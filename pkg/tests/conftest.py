import numpy as np
import pytest

from gridsense.network import assemble_topology, builtin_network


@pytest.fixture(scope="session")
def six_bus():
    return builtin_network("six_bus")


@pytest.fixture(scope="session")
def feeder69():
    return builtin_network("feeder69")


@pytest.fixture(scope="session")
def H69(feeder69):
    return assemble_topology(feeder69).H


def random_instance(rng, P=40, N=20):
    H = (rng.standard_normal((P, N)) + 1j * rng.standard_normal((P, N))) / np.sqrt(2 * P)
    return H


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

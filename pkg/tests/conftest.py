from fractions import Fraction

import pytest

from pamn2prism import example_path, load_example

LIBRARY_CONSTANTS = {"totalBooks": 1, "cost": 1, "pp": Fraction(1, 2)}


@pytest.fixture(scope="session")
def demon():
    return load_example("demon")


@pytest.fixture(scope="session")
def library_unsafe():
    return load_example("library_unsafe")


@pytest.fixture(scope="session")
def library_safe():
    return load_example("library_safe")


@pytest.fixture
def source():
    return lambda name: example_path(name).read_text(encoding="utf-8")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    ran = [r for r in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", [])
           if "test_acceptance" in r.nodeid]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 8):
        terminalreporter.write_line(RESULTS.get(n, f"criterion {n} [FAIL] did not complete"))

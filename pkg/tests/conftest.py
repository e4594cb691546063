import pytest

from phicontract.scenario import load_scenario


@pytest.fixture(scope="session")
def ex2():
    return load_scenario("example2-repaired")


@pytest.fixture(scope="session")
def ex2_unrepaired():
    return load_scenario("example2-paper")


@pytest.fixture(scope="session")
def usual():
    return load_scenario("usual-metric-example2")


@pytest.fixture(scope="session")
def shifted():
    return load_scenario("shifted-thm1")


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from metwarp import load_spec


@pytest.fixture(scope="session")
def polar():
    return load_spec("builtin:polar")


@pytest.fixture(scope="session")
def hyperbolic():
    return load_spec("builtin:hyperbolic")


@pytest.fixture(scope="session")
def example3_n2():
    return load_spec("builtin:example3?n=2&k=1&p=1&q=1")


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])

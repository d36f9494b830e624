import pytest
from hypothesis import settings

from henon_cocycle.henon_core import HenonParams

settings.register_profile("default", deadline=None, derandomize=True, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def basilica():
    """c = -1, a = 1e-3."""
    return HenonParams(-1, 1e-3)


@pytest.fixture(scope="session")
def rabbit_like():
    """c = 0.1i, a = 0.05."""
    return HenonParams(0.1j, 0.05)


@pytest.fixture
def record():
    def put(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return put


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

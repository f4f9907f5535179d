import pytest

from nmrqc.cli import demo_system_path
from nmrqc.spins import build_system, load_system

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def three_spin():
    return load_system(demo_system_path("three_spin"))


@pytest.fixture(scope="session")
def four_spin():
    return load_system(demo_system_path("four_spin"))


@pytest.fixture(scope="session")
def two_spin():
    return load_system(demo_system_path("two_spin"))


@pytest.fixture
def small_system():
    """Shifts (500, 100, 50) Hz, J01=10, J02=5, J12=2 Hz."""
    return build_system({
        "spins": 3,
        "shifts_hz": [500, 100, 50],
        "j_hz": [[0, 10, 5], [10, 0, 2], [5, 2, 0]],
        "roles": ["observer", "input", "input"],
    })


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_RESULTS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")

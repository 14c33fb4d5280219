import pytest

from crashsev.synthetic import BUNDLED_FIXTURE

ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def fixture_csv():
    return BUNDLED_FIXTURE


@pytest.fixture
def record_criterion():
    """Record (criterion, status, detail) for the end-of-run acceptance table."""

    def record(name: str, status: str, detail: str = "") -> None:
        ACCEPTANCE.append((name, status, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{status:<15} {name}" + (f"  ({detail})" if detail else ""))

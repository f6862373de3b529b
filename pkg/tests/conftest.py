import pytest

RESULTS = []


@pytest.fixture
def criterion():
    def record(number, name, passed, detail):
        RESULTS.append((number, name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} [{number:2d}] {name}: {detail}")

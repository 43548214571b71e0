import pytest

# criterion number -> (ok, detail), filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
